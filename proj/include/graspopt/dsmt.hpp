#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/kinematics.hpp"
#include "graspopt/losses.hpp"
#include "graspopt/matching.hpp"

namespace graspopt {

/// Learnable state for one object: N unconstrained pose logits. Every pose read from the
/// table is valid by construction (sigmoid-squashed coordinates, normalized quaternion).
struct GraspTable {
    std::vector<PoseLogits> logits;

    std::size_t size() const { return logits.size(); }
    std::vector<HandPose> poses(const HandModel& model) const;
};

/// N poses on a sphere of radius `radius` around `center`, uniform random rotations,
/// mid-range joints. Deterministic per seed.
GraspTable init_table(const HandModel& model, const Vec3& center, std::size_t count, double radius,
                      std::uint64_t seed);

enum class Stage { dmt, smw, smpt };

const char* stage_name(Stage stage);

struct StageSchedule {
    int dmt_epochs = 15;
    int smw_epochs = 5;
    int smpt_epochs = 5;
    int steps_per_epoch = 50;
    double step_size = 0.5;
    double max_gradient_norm = 1.0;  ///< global clip over the whole table
    LossWeights dmt;
    LossWeights smw;
    LossWeights smpt;
    CostWeights cost;

    StageSchedule();
    void validate() const;
    int total_epochs() const { return dmt_epochs + smw_epochs + smpt_epochs; }
};

/// One row per epoch.
struct EpochRecord {
    int epoch = 0;  ///< 1-based
    Stage stage = Stage::dmt;
    double total = 0.0;  ///< mean over steps and matched pairs of the weighted objective
    double param = 0.0;
    double chamfer = 0.0;
    double spen = 0.0;
    double pen = 0.0;
    double dist = 0.0;
    double instability = 0.0;  ///< vs the previous epoch's assignment; 0 for the first epoch
    double similarity = 0.0;   ///< at epoch end
    double mean_pen_cm = 0.0;  ///< at epoch end, over all table poses
    double max_pen_cm = 0.0;
    long hungarian_solves = 0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
};

/// A training problem: hand, object and its ground-truth grasps.
struct ToyTask {
    const HandModel* model = nullptr;
    const ObjectCloud* cloud = nullptr;
    std::vector<HandPose> ground_truths;
};

struct EpochResult {
    Assignment assignment;
    EpochRecord record;
};

/// Dynamic epoch: one Hungarian solve on the current poses, then gradient steps on the
/// matched losses under `weights`. The DMT stage calls this with the DMT weights.
EpochResult dmt_epoch(GraspTable& table, const ToyTask& task, const LossWeights& weights,
                      const StageSchedule& schedule);

/// Assignment used for every epoch after the dynamic stage.
Assignment record_static_matching(const GraspTable& table, const ToyTask& task, const CostWeights& cost,
                                  double smooth_l1_beta = 0.1);

/// Static epochs: gradient steps under a frozen assignment, no matching solve.
EpochResult smw_epoch(GraspTable& table, const ToyTask& task, const Assignment& frozen,
                      const StageSchedule& schedule);
EpochResult smpt_epoch(GraspTable& table, const ToyTask& task, const Assignment& frozen,
                       const StageSchedule& schedule);

struct DsmtResult {
    GraspTable table;
    TrainTrace trace;
    Assignment static_matching;  ///< empty when the dynamic stage is the whole schedule
};

/// T0 dynamic epochs, the static snapshot, T1 SMW and T2 SMPT epochs.
DsmtResult run_dsmt(const ToyTask& task, GraspTable table, const StageSchedule& schedule);

}  // namespace graspopt
