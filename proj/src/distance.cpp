#include "graspopt/distance.hpp"

#include <algorithm>
#include <limits>

#include "graspopt/errors.hpp"

namespace graspopt {

double segment_parameter(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return 0.0;
    return std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
}

double capsule_signed_distance(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
    const double u = segment_parameter(p, a, b);
    return (p - (a + u * (b - a))).norm() - radius;
}

PlacedCapsules::PlacedCapsules(const PosedHand& hand) {
    const auto& caps = hand.model().capsules();
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (std::size_t c = 0; c < caps.size(); ++c) {
        a_.push_back(hand.capsule_a(c));
        b_.push_back(hand.capsule_b(c));
        radius_.push_back(caps[c].radius);
        const Vec3 r = Vec3::Constant(caps[c].radius);
        lo_ = lo_.cwiseMin(a_.back() - r).cwiseMin(b_.back() - r);
        hi_ = hi_.cwiseMax(a_.back() + r).cwiseMax(b_.back() + r);
    }
}

HandDistance PlacedCapsules::query(const Vec3& p) const {
    HandDistance best{std::numeric_limits<double>::infinity(), 0, 0.0};
    for (std::size_t c = 0; c < a_.size(); ++c) {
        const double u = segment_parameter(p, a_[c], b_[c]);
        const double d = (p - (a_[c] + u * (b_[c] - a_[c]))).norm() - radius_[c];
        if (d < best.value) best = {d, c, u};
    }
    return best;
}

double signed_distance_to_hand(const HandModel& model, const HandPose& pose, const Vec3& point) {
    validate_pose(model, pose, 1e-6);
    if (model.capsules().empty()) throw ValidationError("hand has no capsules");
    const PosedHand hand(model, pose);
    return PlacedCapsules(hand).query(point).value;
}

namespace {

double mean_nearest(std::span<const Vec3> from, std::span<const Vec3> to) {
    double sum = 0.0;
    if (to.size() > 64) {
        const KdTree tree(to);
        for (const auto& p : from) sum += tree.nearest(p).squared_distance;
    } else {
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
            sum += best;
        }
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw ValidationError("chamfer distance of an empty point set");
    return mean_nearest(a, b) + mean_nearest(b, a);
}

}  // namespace graspopt
