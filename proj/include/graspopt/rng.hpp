#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "graspopt/geometry.hpp"

namespace graspopt {

// Draws are built directly from mt19937_64 bits so sequences are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    Vec3 unit_vector() {
        Vec3 v;
        do {
            v = {normal(), normal(), normal()};
        } while (v.norm() < 1e-12);
        return v.normalized();
    }

    Vec4 unit_quaternion() {
        Vec4 q;
        do {
            q = {normal(), normal(), normal(), normal()};
        } while (q.norm() < 1e-12);
        return q.normalized();
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace graspopt
