#pragma once

#include <span>
#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/kinematics.hpp"

namespace graspopt {

/// Closest point on segment [a, b] as the parameter u in [0, 1].
double segment_parameter(const Vec3& p, const Vec3& a, const Vec3& b);

/// Distance from p to segment [a, b] minus radius.
double capsule_signed_distance(const Vec3& p, const Vec3& a, const Vec3& b, double radius);

/// Signed distance of `point` to the posed capsule hand (positive outside, negative inside).
double signed_distance_to_hand(const HandModel& model, const HandPose& pose, const Vec3& point);

/// Closest-capsule query result for one point.
struct HandDistance {
    double value = 0.0;      ///< signed distance, meters
    std::size_t capsule = 0; ///< minimising capsule
    double u = 0.0;          ///< closest axis parameter on that capsule
};

/// Capsules of a posed hand in world coordinates, for repeated point queries.
class PlacedCapsules {
public:
    explicit PlacedCapsules(const PosedHand& hand);
    HandDistance query(const Vec3& p) const;
    std::size_t size() const { return a_.size(); }
    const Vec3& a(std::size_t c) const { return a_[c]; }
    const Vec3& b(std::size_t c) const { return b_[c]; }
    double radius(std::size_t c) const { return radius_[c]; }
    /// True when p lies outside the hand's inflated bounding box, i.e. certainly outside the hand.
    bool clearly_outside(const Vec3& p) const {
        return (p.array() < lo_.array()).any() || (p.array() > hi_.array()).any();
    }

private:
    std::vector<Vec3> a_, b_;
    std::vector<double> radius_;
    Vec3 lo_, hi_;  // bounding box of all capsules, inflated by radius
};

/// Symmetric chamfer distance: mean squared nearest distance A->B plus B->A (m^2).
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace graspopt
