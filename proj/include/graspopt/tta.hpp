#pragma once

#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/kinematics.hpp"
#include "graspopt/losses.hpp"

namespace graspopt {

/// Test-time refinement settings. Loss weights, tau and the penetration scale come from `weights`.
struct TtaConfig {
    int steps = 200;
    double step_size = 1e-3;         ///< gradient-descent step in normalized coordinates
    double translation_scale = 0.0;  ///< beta_t; 0 freezes the root translation
    double tolerance = 1e-9;         ///< stop when |loss change| falls below this
    int divergence_patience = 10;    ///< consecutive loss increases before aborting
    /// Pen+VDis ablation: distance term without the coarse-pose anchor. Usually paired with
    /// translation_scale = 1 (no translation moderation either).
    bool vanilla = false;
    LossWeights weights;

    void validate() const;
};

struct TtaStep {
    int step = 0;
    double loss = 0.0;
    double pen = 0.0;   ///< pen_loss (unscaled, m^2)
    double dist = 0.0;  ///< anchored (or vanilla) distance term, m
    double spen = 0.0;
    double max_pen_cm = 0.0;
    int contacts = 0;   ///< keypoints within tau
};

enum class TtaStop { steps, converged, diverged };

const char* stop_name(TtaStop stop);

struct TtaResult {
    HandPose pose;  ///< best pose seen (lowest loss)
    std::vector<TtaStep> trace;
    TtaStop stop = TtaStop::steps;
    double initial_loss = 0.0;
    double final_loss = 0.0;  ///< loss of `pose`
};

/// Refines `coarse` against the object by descending the adversarial pen/dist/spen objective.
/// Keypoints within tau of the cloud in the coarse pose stay in the distance term for the whole run.
TtaResult refine(const HandModel& model, const HandPose& coarse, const ObjectCloud& cloud, const TtaConfig& config);

struct TtaSetSummary {
    double mean_initial_loss = 0.0;
    double mean_final_loss = 0.0;
    int converged = 0;
    int diverged = 0;
};

struct TtaSetResult {
    std::vector<TtaResult> grasps;  ///< same order as the input
    TtaSetSummary summary;
};

TtaSetResult refine_set(const HandModel& model, std::span<const HandPose> coarse, const ObjectCloud& cloud,
                        const TtaConfig& config);

}  // namespace graspopt
