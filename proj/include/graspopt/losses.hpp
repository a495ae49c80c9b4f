#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/distance.hpp"
#include "graspopt/kinematics.hpp"

namespace graspopt {

/// Loss weights and thresholds shared by training, refinement and matching.
struct LossWeights {
    // Grasp-loss weights (lambda_1..lambda_6) and the SMPT distance-loss weight.
    double trans = 10.0;
    double joints = 10.0;
    double rotation = 10.0;
    double chamfer = 1.0;
    double spen = 10.0;
    double pen = 0.0;
    double dist = 0.0;

    // Refinement weights (alpha_1..alpha_3).
    double alpha_pen = 5.0;
    double alpha_dist = 3.0;
    double alpha_spen = 5.0;

    double contact_threshold = 0.01;    ///< tau, meters
    double smooth_l1_beta = 0.1;        ///< transition width in normalized coordinates
    double spen_min_separation = 0.02;  ///< keypoint pair separation, meters

    /// Multiplier on pen_loss wherever it enters a weighted objective. pen_loss is a mean of
    /// squared depths in m^2, several orders of magnitude below the other terms; this brings
    /// it to a scale where the lambda/alpha weights balance.
    double penetration_scale = 1.0e6;

    std::size_t chamfer_samples = 64;
    std::uint64_t chamfer_seed = 7;

    /// Throws ValidationError when a weight is negative or a threshold is not positive.
    void validate() const;
};

/// Smooth-L1 (Huber) of one residual with transition width beta.
double smooth_l1(double x, double beta);
double smooth_l1_derivative(double x, double beta);

/// 1 - |r . r_hat| for unit quaternions (exactly 0 when r_hat = +-r).
double rotation_loss(const Vec4& r, const Vec4& r_hat);

/// Per-dimension mean smooth-L1 on normalized translation and joints.
double translation_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, double beta);
double joint_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, double beta);

/// lambda_1 L_trans + lambda_2 L_joints + lambda_3 L_rotation.
double param_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, const LossWeights& w);

/// Chamfer distance between surface samples of the two posed hands (same local samples).
double chamfer_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, std::size_t sample_count,
                    std::uint64_t seed);

/// Mean over object points of max(0, -s)^2.
double pen_loss(const HandModel& model, const HandPose& g, const ObjectCloud& cloud);

/// Sum over checked keypoint pairs of max(0, d_min - |p_i - p_j|).
double spen_loss(const HandModel& model, const HandPose& g, double min_separation = 0.02);

/// Sum over keypoints closer than tau to the cloud of their nearest distance.
double van_dist_loss(const HandModel& model, const HandPose& g, const ObjectCloud& cloud, double tau);

/// Like van_dist_loss, but a keypoint also counts when its coarse-pose position was within tau.
double tta_dist_loss(const HandModel& model, const HandPose& g_ref, const HandPose& g_coarse,
                     const ObjectCloud& cloud, double tau);

/// alpha_1 kappa pen + alpha_2 tta_dist + alpha_3 spen.
double ab_tta_loss(const HandModel& model, const HandPose& g_ref, const HandPose& g_coarse,
                   const ObjectCloud& cloud, const LossWeights& w);

/// param + lambda_4 chamfer + lambda_5 spen + lambda_6 kappa pen for one matched pair.
double grasp_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, const ObjectCloud& cloud,
                  const LossWeights& w);

enum class LossKind { rotation, param, chamfer, pen, spen, van_dist, tta_dist, ab_tta, grasp };

const char* loss_name(LossKind kind);

/// Everything any loss may need. `reference` is g_hat for pair losses and g_coarse for tta_dist/ab_tta.
struct LossInputs {
    const HandModel* model = nullptr;
    HandPose pose;
    HandPose reference;
    const ObjectCloud* cloud = nullptr;
    LossWeights weights;
};

struct ValueAndGradient {
    double value = 0.0;
    VecX gradient;  ///< over [r(4), t(3), q(J)] of `pose`
};

/// Value of the selected loss at `in.pose`.
double evaluate_loss(LossKind kind, const LossInputs& in);

/// Value and gradient of the selected loss with respect to the 7+J parameters of `in.pose`.
/// Indicator gates are treated as constants; at max/min kinks the branch toward zero is taken.
ValueAndGradient loss_gradient(LossKind kind, const LossInputs& in);

// ---------------------------------------------------------------------------
// Term-level building blocks. Each returns the term value and, when `out` is
// non-null, appends weight * dL/dp cotangents for the posed hand's points.

double pen_term(const PosedHand& hand, const PlacedCapsules& capsules, const ObjectCloud& cloud, double weight,
                std::vector<PointCotangent>* out);
double spen_term(const PosedHand& hand, double min_separation, double weight, std::vector<PointCotangent>* out);

/// Keypoint distance term. `anchor` (may be empty) marks keypoints kept regardless of their current distance.
double dist_term(const PosedHand& hand, const ObjectCloud& cloud, double tau, std::span<const char> anchor,
                 double weight, std::vector<PointCotangent>* out);

/// Chamfer term against fixed target points; `samples` are the local samples behind `target`.
double chamfer_term(const PosedHand& hand, const SurfaceSamples& samples, std::span<const Vec3> target,
                    double weight, std::vector<PointCotangent>* out);

/// Param loss value; adds weight * gradient into `grad` (size 7+J) when non-null.
double param_term(const HandModel& model, const HandPose& g, const HandPose& g_hat, const LossWeights& w,
                  double weight, VecX* grad);

/// Keypoints of `hand` within tau of the cloud (1) or not (0).
std::vector<char> contact_mask(const PosedHand& hand, const ObjectCloud& cloud, double tau);

}  // namespace graspopt
