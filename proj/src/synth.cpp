#include "graspopt/synth.hpp"

#include <cmath>
#include <numbers>

#include "graspopt/errors.hpp"
#include "graspopt/rng.hpp"

namespace graspopt {

namespace {

ObjectCloud sphere(double radius, std::size_t count, Rng& rng) {
    std::vector<Vec3> pts, normals;
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3 n = rng.unit_vector();
        pts.push_back(radius * n);
        normals.push_back(n);
    }
    return ObjectCloud(std::move(pts), std::move(normals));
}

ObjectCloud box(const Vec3& size, std::size_t count, Rng& rng) {
    const Vec3 h = 0.5 * size;
    // face pairs normal to x, y, z
    const double area[3] = {size.y() * size.z(), size.x() * size.z(), size.x() * size.y()};
    const double total = area[0] + area[1] + area[2];
    std::vector<Vec3> pts, normals;
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = rng.uniform() * total;
        const int axis = pick < area[0] ? 0 : (pick < area[0] + area[1] ? 1 : 2);
        const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
        Vec3 p;
        for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-h[a], h[a]);
        p[axis] = side * h[axis];
        Vec3 n = Vec3::Zero();
        n[axis] = side;
        pts.push_back(p);
        normals.push_back(n);
    }
    return ObjectCloud(std::move(pts), std::move(normals));
}

ObjectCloud cylinder(double radius, double height, std::size_t count, Rng& rng) {
    const double side_area = 2.0 * std::numbers::pi * radius * height;
    const double cap_area = std::numbers::pi * radius * radius;
    std::vector<Vec3> pts, normals;
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = rng.uniform() * (side_area + 2.0 * cap_area);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        if (pick < side_area) {
            const Vec3 n{std::cos(phi), std::sin(phi), 0.0};
            pts.push_back(Vec3(radius * n.x(), radius * n.y(), rng.uniform(-0.5 * height, 0.5 * height)));
            normals.push_back(n);
        } else {
            const double side = pick < side_area + cap_area ? 1.0 : -1.0;
            const double r = radius * std::sqrt(rng.uniform());
            pts.push_back(Vec3(r * std::cos(phi), r * std::sin(phi), side * 0.5 * height));
            normals.push_back(Vec3(0, 0, side));
        }
    }
    return ObjectCloud(std::move(pts), std::move(normals));
}

}  // namespace

ObjectCloud synth_object(const ShapeSpec& shape, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw ValidationError("synthetic object needs at least one point");
    Rng rng(seed);
    switch (shape.kind) {
        case ShapeKind::sphere:
            if (!(shape.radius > 0)) throw ValidationError("sphere radius must be > 0");
            return sphere(shape.radius, count, rng);
        case ShapeKind::box:
            if (!(shape.size.minCoeff() > 0)) throw ValidationError("box size must be > 0");
            return box(shape.size, count, rng);
        case ShapeKind::cylinder:
            if (!(shape.radius > 0 && shape.height > 0)) throw ValidationError("cylinder radius and height must be > 0");
            return cylinder(shape.radius, shape.height, count, rng);
    }
    throw ValidationError("unknown shape");
}

double shape_signed_distance(const ShapeSpec& shape, const Vec3& p) {
    switch (shape.kind) {
        case ShapeKind::sphere: return p.norm() - shape.radius;
        case ShapeKind::box: {
            const Vec3 q = p.cwiseAbs() - 0.5 * shape.size;
            return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
        }
        case ShapeKind::cylinder: {
            const double dr = std::hypot(p.x(), p.y()) - shape.radius;
            const double dz = std::abs(p.z()) - 0.5 * shape.height;
            return std::hypot(std::max(dr, 0.0), std::max(dz, 0.0)) + std::min(std::max(dr, dz), 0.0);
        }
    }
    return 0.0;
}

const char* shape_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::box: return "box";
        case ShapeKind::cylinder: return "cylinder";
    }
    return "?";
}

ShapeKind parse_shape_kind(const std::string& name) {
    if (name == "sphere") return ShapeKind::sphere;
    if (name == "box") return ShapeKind::box;
    if (name == "cylinder") return ShapeKind::cylinder;
    throw ValidationError("unknown shape kind '" + name + "' (expected sphere, box or cylinder)");
}

}  // namespace graspopt
