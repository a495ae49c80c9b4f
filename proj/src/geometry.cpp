#include "graspopt/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace graspopt {

Mat3 quaternion_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
    return r;
}

std::array<Mat3, 4> quaternion_matrix_partials(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    std::array<Mat3, 4> d;
    d[0] << w, -z, y, z, w, -x, -y, x, w;
    d[1] << x, y, z, y, -x, -w, z, w, -x;
    d[2] << -y, x, w, x, y, z, -w, z, -y;
    d[3] << -z, -w, x, w, -z, y, x, y, z;
    for (auto& m : d) m *= 2.0;
    return d;
}

Vec4 matrix_quaternion(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    Vec4 out{q.w(), q.x(), q.y(), q.z()};
    if (out[0] < 0) out = -out;
    return out;
}

Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Vec3 euler_xyz(const Mat3& r) {
    const double sb = std::clamp(r(0, 2), -1.0, 1.0);
    const double b = std::asin(sb);
    double a, c;
    if (std::abs(sb) < 1.0 - 1e-12) {
        a = std::atan2(-r(1, 2), r(2, 2));
        c = std::atan2(-r(0, 1), r(0, 0));
    } else {
        // gimbal lock: fold the remaining rotation into a
        a = std::atan2(r(2, 1), r(1, 1));
        c = 0.0;
    }
    return {a, b, c};
}

}  // namespace graspopt
