#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graspopt/geometry.hpp"
#include "graspopt/hand_model.hpp"

namespace graspopt {

/// Grasp vector g = (r, t, q): scalar-first quaternion, translation in meters, joint angles in radians.
struct HandPose {
    Vec4 rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation = Vec3::Zero();
    VecX joints;

    /// Identity rotation, zero translation, joints at zero clamped into their limits.
    static HandPose rest(const HandModel& model);
};

/// Flat parameter vector [r(4), t(3), q(J)].
VecX pose_vector(const HandPose& pose);
HandPose pose_from_vector(const HandModel& model, const VecX& params);

/// Throws ValidationError unless |r| = 1 within `tolerance` and q has J entries.
void validate_pose(const HandModel& model, const HandPose& pose, double tolerance = 1e-6);
bool joints_within_limits(const HandModel& model, const HandPose& pose);
void clamp_joints(const HandModel& model, HandPose& pose);

/// Link frames for one pose.
struct HandFrames {
    std::vector<Frame> chain;  ///< link frames in the hand root frame, before the global (r, t)
    std::vector<Frame> world;
    Frame root;                ///< (R(r), t)
    std::array<Mat3, 4> root_partials;
    std::vector<Vec3> joint_axes;    ///< root-frame joint axes
    std::vector<Vec3> joint_pivots;  ///< root-frame joint origins
};

/// Evaluates the kinematic tree without checking the quaternion norm
/// (the rotation is the quadratic map of the raw 4-vector).
HandFrames evaluate_frames(const HandModel& model, const HandPose& pose);

/// World transform of every link. Rejects quaternions further than 1e-6 from unit length.
std::vector<Frame> forward_kinematics(const HandModel& model, const HandPose& pose);

/// A point rigidly attached to a link.
struct LinkPoint {
    int link = 0;
    Vec3 local = Vec3::Zero();
};

/// Surface samples in link-local coordinates; invariant across poses for a fixed seed.
struct SurfaceSamples {
    std::vector<LinkPoint> points;
};

/// Area-weighted uniform samples on the capsule surfaces. Samples falling inside another
/// capsule of the same link are redrawn.
SurfaceSamples sample_surface(const HandModel& model, std::size_t count, std::uint64_t seed);

struct HandPoints {
    std::vector<Vec3> keypoints;
    std::vector<Vec3> surface;
};

HandPoints keypoints_and_surface(const HandModel& model, const HandPose& pose,
                                 std::size_t surface_sample_count, std::uint64_t seed);

/// World-space cotangent (dL/dp) attached to a point on a link.
struct PointCotangent {
    int link = 0;
    Vec3 local = Vec3::Zero();
    Vec3 cotangent = Vec3::Zero();
};

/// Chain rule from point cotangents to the 7+J pose parameters; the quaternion block
/// is the ambient 4-space gradient.
VecX pose_pullback(const HandModel& model, const HandFrames& frames,
                   std::span<const PointCotangent> cotangents);

/// Convenience form: one cotangent per keypoint, and one per sample of `samples`
/// (either span may be empty).
VecX pose_pullback(const HandModel& model, const HandPose& pose, std::span<const Vec3> keypoint_cotangents,
                   const SurfaceSamples& samples, std::span<const Vec3> surface_cotangents);

/// One hand evaluated at one pose, with cached world keypoints.
class PosedHand {
public:
    PosedHand(const HandModel& model, const HandPose& pose);

    const HandModel& model() const { return *model_; }
    const HandPose& pose() const { return pose_; }
    const HandFrames& frames() const { return frames_; }
    const std::vector<Vec3>& keypoints() const { return keypoints_; }

    Vec3 to_world(const LinkPoint& p) const { return frames_.world[p.link].apply(p.local); }
    Vec3 capsule_a(std::size_t c) const;
    Vec3 capsule_b(std::size_t c) const;

    VecX pullback(std::span<const PointCotangent> cotangents) const {
        return pose_pullback(*model_, frames_, cotangents);
    }

private:
    const HandModel* model_;
    HandPose pose_;
    HandFrames frames_;
    std::vector<Vec3> keypoints_;
};

/// Translation and joints mapped into (0, 1) by the workspace box and the joint limits;
/// rotation kept as an unnormalized 4-vector.
struct NormalizedPose {
    Vec4 rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation = Vec3::Constant(0.5);
    VecX joints;
};

struct NormalizeResult {
    NormalizedPose value;
    bool saturated = false;  ///< some coordinate fell outside [0, 1] and was clamped
};

NormalizeResult normalize_pose(const HandModel& model, const HandPose& pose);
HandPose denormalize_pose(const HandModel& model, const NormalizedPose& normalized);

/// Unconstrained head outputs: logits for translation and joints, raw 4-vector for rotation.
struct PoseLogits {
    Vec4 rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation = Vec3::Zero();
    VecX joints;
};

/// Logistic squashing of translation/joint logits.
NormalizedPose squash(const PoseLogits& logits);
PoseLogits unsquash(const NormalizedPose& normalized);

/// Pulls a gradient over raw pose parameters [r, t, q] back to PoseLogits parameters
/// (same layout); `logits` is the point the pose was produced from.
VecX logits_pullback(const HandModel& model, const PoseLogits& logits, const VecX& pose_gradient);

}  // namespace graspopt
