#include "graspopt/dsmt.hpp"

#include <cmath>
#include <optional>

#include "graspopt/errors.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/rng.hpp"

namespace graspopt {

std::vector<HandPose> GraspTable::poses(const HandModel& model) const {
    std::vector<HandPose> out;
    out.reserve(logits.size());
    for (const auto& l : logits) out.push_back(denormalize_pose(model, squash(l)));
    return out;
}

GraspTable init_table(const HandModel& model, const Vec3& center, std::size_t count, double radius,
                      std::uint64_t seed) {
    if (count == 0) throw ValidationError("grasp table needs at least one pose");
    if (!(radius > 0.0)) throw ValidationError("initial sphere radius must be > 0");
    Rng rng(seed);
    GraspTable table;
    for (std::size_t i = 0; i < count; ++i) {
        HandPose p = HandPose::rest(model);
        p.translation = center + radius * rng.unit_vector();
        p.rotation = rng.unit_quaternion();
        for (std::size_t j = 0; j < model.dof(); ++j) p.joints[j] = model.joints()[j].mid();
        const NormalizeResult n = normalize_pose(model, p);
        if (n.saturated) throw ValidationError("initial sphere leaves the workspace box");
        table.logits.push_back(unsquash(n.value));
    }
    return table;
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::dmt: return "dmt";
        case Stage::smw: return "smw";
        case Stage::smpt: return "smpt";
    }
    return "?";
}

StageSchedule::StageSchedule() {
    smpt.pen = 50.0;
    smpt.dist = 10.0;
}

void StageSchedule::validate() const {
    if (dmt_epochs < 0 || smw_epochs < 0 || smpt_epochs < 0) throw ValidationError("stage epochs must be >= 0");
    if (steps_per_epoch < 1) throw ValidationError("steps per epoch must be >= 1");
    if (!(step_size > 0.0)) throw ValidationError("training step size must be > 0");
    if (!(max_gradient_norm > 0.0)) throw ValidationError("gradient clip must be > 0");
    if (dmt_epochs == 0 && smw_epochs + smpt_epochs > 0)
        throw ValidationError("static stages need at least one dynamic epoch before the snapshot");
    dmt.validate();
    smw.validate();
    smpt.validate();
    cost.validate();
}

namespace {

void check_task(const ToyTask& task) {
    if (!task.model || !task.cloud) throw ValidationError("toy task needs a hand model and an object cloud");
    if (task.ground_truths.empty()) throw ValidationError("toy task needs ground-truth grasps");
    for (const auto& g : task.ground_truths) validate_pose(*task.model, g);
}

struct PairTerms {
    double total = 0, param = 0, chamfer = 0, spen = 0, pen = 0, dist = 0;
};

// Matched-pair regression objective: param + l4 chamfer + l5 spen + l6 kappa pen + w_dist van_dist.
PairTerms pair_gradient(const HandModel& model, const HandPose& pose, const HandPose& gt,
                        const SurfaceSamples& samples, const std::vector<Vec3>& gt_points, const ObjectCloud& cloud,
                        const LossWeights& w, VecX& grad) {
    PairTerms t;
    grad = VecX::Zero(static_cast<Eigen::Index>(model.parameter_count()));
    t.param = param_term(model, pose, gt, w, 1.0, &grad);
    const PosedHand hand(model, pose);
    std::vector<PointCotangent> cot;
    if (w.chamfer > 0) t.chamfer = chamfer_term(hand, samples, gt_points, w.chamfer, &cot);
    if (w.spen > 0) t.spen = spen_term(hand, w.spen_min_separation, w.spen, &cot);
    const double kp = w.pen * w.penetration_scale;
    if (kp > 0) t.pen = pen_term(hand, PlacedCapsules(hand), cloud, kp, &cot);
    if (w.dist > 0) t.dist = dist_term(hand, cloud, w.contact_threshold, {}, w.dist, &cot);
    grad += hand.pullback(cot);
    t.total = t.param + w.chamfer * t.chamfer + w.spen * t.spen + kp * t.pen + w.dist * t.dist;
    return t;
}

// Gradient steps on the matched pairs of `assignment`.
EpochRecord train_epoch(GraspTable& table, const ToyTask& task, const Assignment& assignment,
                        const LossWeights& w, const StageSchedule& schedule) {
    const HandModel& model = *task.model;
    const SurfaceSamples samples = sample_surface(model, w.chamfer_samples, w.chamfer_seed);
    std::vector<std::vector<Vec3>> gt_points;
    for (const auto& g : task.ground_truths) {
        const PosedHand hand(model, g);
        std::vector<Vec3> pts;
        for (const auto& p : samples.points) pts.push_back(hand.to_world(p));
        gt_points.push_back(std::move(pts));
    }

    EpochRecord rec;
    const auto pairs = static_cast<double>(std::max<std::size_t>(1, assignment.pairs.size()));
    const auto width = static_cast<Eigen::Index>(model.parameter_count());
    for (int step = 0; step < schedule.steps_per_epoch; ++step) {
        std::vector<VecX> grads(table.size(), VecX::Zero(width));
        double norm2 = 0.0;
        for (const auto& [pred, gt] : assignment.pairs) {
            const PoseLogits& l = table.logits[pred];
            const HandPose pose = denormalize_pose(model, squash(l));
            VecX g;
            const PairTerms t =
                pair_gradient(model, pose, task.ground_truths[gt], samples, gt_points[gt], *task.cloud, w, g);
            grads[pred] = logits_pullback(model, l, g) / pairs;
            norm2 += grads[pred].squaredNorm();
            rec.total += t.total / pairs;
            rec.param += t.param / pairs;
            rec.chamfer += t.chamfer / pairs;
            rec.spen += t.spen / pairs;
            rec.pen += t.pen / pairs;
            rec.dist += t.dist / pairs;
        }
        const double norm = std::sqrt(norm2);
        const double scale = schedule.step_size * (norm > schedule.max_gradient_norm ? schedule.max_gradient_norm / norm : 1.0);
        for (std::size_t i = 0; i < table.size(); ++i) {
            PoseLogits& l = table.logits[i];
            l.rotation -= scale * Vec4(grads[i].segment<4>(0));
            l.translation -= scale * Vec3(grads[i].segment<3>(4));
            l.joints -= scale * grads[i].tail(grads[i].size() - 7);
        }
    }
    const double n = schedule.steps_per_epoch;
    for (double* v : {&rec.total, &rec.param, &rec.chamfer, &rec.spen, &rec.pen, &rec.dist}) *v /= n;

    const auto poses = table.poses(model);
    rec.similarity = pose_similarity(model, poses);
    for (const auto& p : poses) {
        const double d = pen_depth(model, p, *task.cloud);
        rec.mean_pen_cm += d / static_cast<double>(poses.size());
        rec.max_pen_cm = std::max(rec.max_pen_cm, d);
    }
    return rec;
}

Assignment solve(const GraspTable& table, const ToyTask& task, const CostWeights& cost, double beta) {
    const auto poses = table.poses(*task.model);
    return hungarian(cost_matrix(*task.model, poses, task.ground_truths, cost, beta));
}

}  // namespace

EpochResult dmt_epoch(GraspTable& table, const ToyTask& task, const LossWeights& weights,
                      const StageSchedule& schedule) {
    check_task(task);
    const long before = hungarian_call_count();
    EpochResult out;
    out.assignment = solve(table, task, schedule.cost, weights.smooth_l1_beta);
    out.record = train_epoch(table, task, out.assignment, weights, schedule);
    out.record.stage = Stage::dmt;
    out.record.hungarian_solves = hungarian_call_count() - before;
    return out;
}

Assignment record_static_matching(const GraspTable& table, const ToyTask& task, const CostWeights& cost,
                                  double smooth_l1_beta) {
    check_task(task);
    return solve(table, task, cost, smooth_l1_beta);
}

namespace {

EpochResult static_epoch(GraspTable& table, const ToyTask& task, const Assignment& frozen,
                         const LossWeights& weights, const StageSchedule& schedule, Stage stage) {
    check_task(task);
    if (frozen.prediction_count != static_cast<int>(table.size()) ||
        frozen.ground_truth_count != static_cast<int>(task.ground_truths.size()))
        throw ValidationError("frozen assignment does not fit this table and ground-truth set");
    const long before = hungarian_call_count();
    EpochResult out;
    out.assignment = frozen;
    out.record = train_epoch(table, task, frozen, weights, schedule);
    out.record.stage = stage;
    out.record.hungarian_solves = hungarian_call_count() - before;
    if (out.record.hungarian_solves != 0) throw RuntimeError("matching solved during a static epoch");
    return out;
}

}  // namespace

EpochResult smw_epoch(GraspTable& table, const ToyTask& task, const Assignment& frozen,
                      const StageSchedule& schedule) {
    return static_epoch(table, task, frozen, schedule.smw, schedule, Stage::smw);
}

EpochResult smpt_epoch(GraspTable& table, const ToyTask& task, const Assignment& frozen,
                       const StageSchedule& schedule) {
    return static_epoch(table, task, frozen, schedule.smpt, schedule, Stage::smpt);
}

DsmtResult run_dsmt(const ToyTask& task, GraspTable table, const StageSchedule& schedule) {
    schedule.validate();
    check_task(task);
    DsmtResult out;
    std::optional<Assignment> previous;
    int epoch = 0;
    auto push = [&](EpochResult r) {
        r.record.epoch = ++epoch;
        r.record.instability = previous ? matching_instability(*previous, r.assignment) : 0.0;
        previous = std::move(r.assignment);
        out.trace.epochs.push_back(r.record);
    };
    for (int e = 0; e < schedule.dmt_epochs; ++e) push(dmt_epoch(table, task, schedule.dmt, schedule));
    if (schedule.smw_epochs + schedule.smpt_epochs > 0) {
        out.static_matching = record_static_matching(table, task, schedule.cost, schedule.dmt.smooth_l1_beta);
        for (int e = 0; e < schedule.smw_epochs; ++e) push(smw_epoch(table, task, out.static_matching, schedule));
        for (int e = 0; e < schedule.smpt_epochs; ++e) push(smpt_epoch(table, task, out.static_matching, schedule));
    }
    out.table = std::move(table);
    return out;
}

}  // namespace graspopt
