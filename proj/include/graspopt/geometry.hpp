#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace graspopt {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;

/// Rigid (or, for ambient quaternion evaluation, affine) frame: x -> R x + t.
struct Frame {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Frame operator*(const Frame& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }
};

/// Rotation matrix of a scalar-first quaternion (w, x, y, z).
///
/// Uses the homogeneous quadratic form, so the map is defined on all of R^4;
/// for unit quaternions it is the usual rotation matrix.
Mat3 quaternion_matrix(const Vec4& q);

/// Partial derivatives of quaternion_matrix with respect to w, x, y, z.
std::array<Mat3, 4> quaternion_matrix_partials(const Vec4& q);

/// Scalar-first unit quaternion of a rotation matrix.
Vec4 matrix_quaternion(const Mat3& r);

Mat3 axis_angle_matrix(const Vec3& axis, double angle);

/// Intrinsic X-Y-Z Euler angles (R = Rx(a) Ry(b) Rz(c)); a, c in (-pi, pi], b in [-pi/2, pi/2].
Vec3 euler_xyz(const Mat3& r);

inline Vec4 quaternion_product(const Vec4& a, const Vec4& b) {
    return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

}  // namespace graspopt
