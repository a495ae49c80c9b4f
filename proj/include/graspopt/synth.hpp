#pragma once

#include <cstdint>
#include <string>

#include "graspopt/cloud.hpp"

namespace graspopt {

enum class ShapeKind { sphere, box, cylinder };

/// Analytic test object centred at the origin. Sphere uses `radius`; box uses `size`
/// (full edge lengths); cylinder uses `radius` and `height` along z.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::sphere;
    double radius = 0.04;
    Vec3 size = Vec3::Constant(0.08);
    double height = 0.1;
};

/// Surface samples with exact outward normals, area-weighted over faces/caps; deterministic per seed.
ObjectCloud synth_object(const ShapeSpec& shape, std::size_t count, std::uint64_t seed);

/// Signed distance of p to the analytic shape (negative inside).
double shape_signed_distance(const ShapeSpec& shape, const Vec3& p);

const char* shape_name(ShapeKind kind);
ShapeKind parse_shape_kind(const std::string& name);

}  // namespace graspopt
