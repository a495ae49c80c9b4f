#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "graspopt/kinematics.hpp"

namespace graspopt {

/// Matching-cost weights (omega_1..omega_3) for translation, joints and rotation.
struct CostWeights {
    double trans = 2.0;
    double joints = 1.0;
    double rotation = 2.0;

    void validate() const;
};

using CostMatrix = Eigen::MatrixXd;  ///< rows: predictions, columns: ground truths

/// C(i, j) = omega_1 L_trans + omega_2 L_joints + omega_3 L_rotation between prediction i and ground truth j.
CostMatrix cost_matrix(const HandModel& model, std::span<const HandPose> predictions,
                       std::span<const HandPose> ground_truths, const CostWeights& weights,
                       double smooth_l1_beta = 0.1);

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  ///< (prediction, ground truth), ascending prediction index
    std::vector<int> unmatched_predictions;
    std::vector<int> unmatched_ground_truths;
    double total_cost = 0.0;
    int prediction_count = 0;
    int ground_truth_count = 0;

    /// Prediction matched to ground truth `gt`, if any.
    std::optional<int> prediction_for(int gt) const;
    /// Ground truth matched to prediction `pred`, if any.
    std::optional<int> ground_truth_for(int pred) const;
};

/// Minimum-cost assignment of size min(N, M). Rectangular matrices are padded with a
/// constant sentinel cost and padded pairs dropped. Among optimal assignments the one whose
/// ground-truth sequence (in prediction order) is lexicographically smallest is returned.
/// Throws ValidationError on non-finite entries.
Assignment hungarian(const CostMatrix& cost);

/// Number of Hungarian solves performed by this thread (for instrumentation).
long hungarian_call_count();

/// Fraction of ground truths whose matched prediction differs between the two
/// assignments; an unmatched ground truth counts as its own distinct value.
double matching_instability(const Assignment& previous, const Assignment& current);

}  // namespace graspopt
