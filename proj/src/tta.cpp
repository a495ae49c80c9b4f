#include "graspopt/tta.hpp"

#include <algorithm>
#include <cmath>

#include "graspopt/distance.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/metrics.hpp"

namespace graspopt {

void TtaConfig::validate() const {
    if (steps < 1) throw ValidationError("refinement needs at least one step");
    if (!(step_size > 0.0)) throw ValidationError("refinement step size must be > 0");
    if (!(translation_scale >= 0.0 && translation_scale <= 1.0))
        throw ValidationError("translation gradient scale must lie in [0, 1]");
    if (!(tolerance >= 0.0)) throw ValidationError("refinement tolerance must be >= 0");
    if (divergence_patience < 1) throw ValidationError("divergence patience must be >= 1");
    weights.validate();
}

const char* stop_name(TtaStop stop) {
    switch (stop) {
        case TtaStop::steps: return "steps";
        case TtaStop::converged: return "converged";
        case TtaStop::diverged: return "diverged";
    }
    return "?";
}

namespace {

struct Evaluation {
    TtaStep terms;
    VecX gradient;
};

Evaluation evaluate(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud,
                    std::span<const char> anchor, const LossWeights& w) {
    const PosedHand hand(model, pose);
    const PlacedCapsules capsules(hand);
    const double kp = w.alpha_pen * w.penetration_scale;
    std::vector<PointCotangent> cot;

    Evaluation e;
    e.terms.pen = pen_term(hand, capsules, cloud, kp, &cot);
    e.terms.dist = dist_term(hand, cloud, w.contact_threshold, anchor, w.alpha_dist, &cot);
    e.terms.spen = spen_term(hand, w.spen_min_separation, w.alpha_spen, &cot);
    e.terms.loss = kp * e.terms.pen + w.alpha_dist * e.terms.dist + w.alpha_spen * e.terms.spen;
    e.terms.max_pen_cm = pen_depth(model, pose, cloud);
    e.terms.contacts = contact_count(model, pose, cloud, w.contact_threshold);
    e.gradient = hand.pullback(cot);
    return e;
}

// One descent step in normalized coordinates n = (x - lo) / (hi - lo), applied to the raw
// parameters. dL/dn = (hi - lo) dL/dx; the rotation block uses the tangent component.
void descend(const HandModel& model, HandPose& pose, const VecX& grad, const TtaConfig& c) {
    const WorkspaceBox& box = model.workspace();
    VecX g(grad.size());
    const Vec4 gr = grad.segment<4>(0);
    g.segment<4>(0) = gr - gr.dot(pose.rotation) * pose.rotation;
    for (int k = 0; k < 3; ++k) g[4 + k] = c.translation_scale * (box.upper[k] - box.lower[k]) * grad[4 + k];
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto i = static_cast<Eigen::Index>(7 + j);
        g[i] = model.joints()[j].range() * grad[i];
    }

    pose.rotation = (pose.rotation - c.step_size * Vec4(g.segment<4>(0))).normalized();
    if (c.translation_scale > 0.0) {
        for (int k = 0; k < 3; ++k) {
            pose.translation[k] -= c.step_size * (box.upper[k] - box.lower[k]) * g[4 + k];
            pose.translation[k] = std::clamp(pose.translation[k], box.lower[k], box.upper[k]);
        }
    }
    for (std::size_t j = 0; j < model.dof(); ++j)
        pose.joints[j] -= c.step_size * model.joints()[j].range() * g[static_cast<Eigen::Index>(7 + j)];
    clamp_joints(model, pose);
}

}  // namespace

TtaResult refine(const HandModel& model, const HandPose& coarse, const ObjectCloud& cloud, const TtaConfig& config) {
    config.validate();
    validate_pose(model, coarse);
    if (cloud.size() == 0) throw ValidationError("refinement needs a non-empty object cloud");

    std::vector<char> anchor;
    if (!config.vanilla) anchor = contact_mask(PosedHand(model, coarse), cloud, config.weights.contact_threshold);

    TtaResult out;
    HandPose pose = coarse;
    out.pose = coarse;
    double previous = 0.0;
    int rising = 0;
    for (int step = 0;; ++step) {
        Evaluation e = evaluate(model, pose, cloud, anchor, config.weights);
        e.terms.step = step;
        out.trace.push_back(e.terms);
        const double loss = e.terms.loss;
        if (step == 0) {
            out.initial_loss = out.final_loss = loss;
        } else {
            if (loss < out.final_loss) {
                out.final_loss = loss;
                out.pose = pose;
            }
            rising = loss > previous ? rising + 1 : 0;
            if (rising >= config.divergence_patience) {
                out.stop = TtaStop::diverged;
                break;
            }
            if (std::abs(loss - previous) < config.tolerance) {
                out.stop = TtaStop::converged;
                break;
            }
        }
        if (step == config.steps) break;
        previous = loss;
        descend(model, pose, e.gradient, config);
    }
    return out;
}

TtaSetResult refine_set(const HandModel& model, std::span<const HandPose> coarse, const ObjectCloud& cloud,
                        const TtaConfig& config) {
    TtaSetResult out;
    for (const auto& g : coarse) {
        out.grasps.push_back(refine(model, g, cloud, config));
        const TtaResult& r = out.grasps.back();
        out.summary.mean_initial_loss += r.initial_loss;
        out.summary.mean_final_loss += r.final_loss;
        out.summary.converged += r.stop == TtaStop::converged;
        out.summary.diverged += r.stop == TtaStop::diverged;
    }
    if (!coarse.empty()) {
        out.summary.mean_initial_loss /= static_cast<double>(coarse.size());
        out.summary.mean_final_loss /= static_cast<double>(coarse.size());
    }
    return out;
}

}  // namespace graspopt
