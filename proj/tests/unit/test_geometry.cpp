#include <doctest.h>

#include <cmath>
#include <numbers>

#include "graspopt/geometry.hpp"
#include "graspopt/rng.hpp"

using namespace graspopt;

namespace {

// Rotation matrix of a unit quaternion, written out independently of the library.
Mat3 reference_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
}

}  // namespace

TEST_CASE("quaternion_matrix matches the unit-quaternion rotation formula") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Vec4 q = rng.unit_quaternion();
        CHECK((quaternion_matrix(q) - reference_matrix(q)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((quaternion_matrix(-q) - quaternion_matrix(q)).cwiseAbs().maxCoeff() < 1e-15);
    }
    CHECK(quaternion_matrix(Vec4(1, 0, 0, 0)).isIdentity(0.0));
}

TEST_CASE("quaternion_matrix_partials match finite differences off the unit sphere") {
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        const Vec4 q = rng.unit_quaternion() * rng.uniform(0.5, 1.5);
        const auto partials = quaternion_matrix_partials(q);
        for (int k = 0; k < 4; ++k) {
            Vec4 qp = q, qm = q;
            qp[k] += 1e-6;
            qm[k] -= 1e-6;
            const Mat3 fd = (quaternion_matrix(qp) - quaternion_matrix(qm)) / 2e-6;
            CHECK((fd - partials[k]).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("matrix_quaternion inverts quaternion_matrix up to sign") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Vec4 q = rng.unit_quaternion();
        const Vec4 back = matrix_quaternion(quaternion_matrix(q));
        CHECK(std::abs(std::abs(back.dot(q)) - 1.0) < 1e-12);
    }
}

TEST_CASE("axis_angle_matrix rotates about the axis") {
    const Mat3 rz = axis_angle_matrix(Vec3::UnitZ(), std::numbers::pi / 2);
    CHECK((rz * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);
    Rng rng(14);
    for (int i = 0; i < 50; ++i) {
        const Vec3 axis = rng.unit_vector();
        const double angle = rng.uniform(-3, 3);
        const Mat3 r = axis_angle_matrix(axis, angle);
        CHECK((r * axis - axis).norm() < 1e-14);
        CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
        CHECK(std::abs(r.trace() - (1 + 2 * std::cos(angle))) < 1e-12);
    }
}

TEST_CASE("euler_xyz recomposes as Rx Ry Rz") {
    Rng rng(15);
    for (int i = 0; i < 200; ++i) {
        const Mat3 r = quaternion_matrix(rng.unit_quaternion());
        const Vec3 e = euler_xyz(r);
        const Mat3 back = axis_angle_matrix(Vec3::UnitX(), e[0]) * axis_angle_matrix(Vec3::UnitY(), e[1]) *
                          axis_angle_matrix(Vec3::UnitZ(), e[2]);
        CHECK((back - r).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(e[1]) <= std::numbers::pi / 2 + 1e-12);
    }
    const Mat3 gimbal = axis_angle_matrix(Vec3::UnitY(), std::numbers::pi / 2) * axis_angle_matrix(Vec3::UnitZ(), 0.3);
    const Vec3 e = euler_xyz(gimbal);
    const Mat3 back = axis_angle_matrix(Vec3::UnitX(), e[0]) * axis_angle_matrix(Vec3::UnitY(), e[1]) *
                      axis_angle_matrix(Vec3::UnitZ(), e[2]);
    CHECK((back - gimbal).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rng draws are reproducible per seed") {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 10; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(a.normal() != c.normal());
}
