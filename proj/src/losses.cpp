#include "graspopt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graspopt/errors.hpp"

namespace graspopt {

namespace {

// Losses are evaluated in the ambient quaternion space so finite differences can step
// off the unit sphere; only grossly non-unit rotations are rejected.
constexpr double kQuaternionTolerance = 1e-4;

void check_pose(const HandModel& model, const HandPose& pose) { validate_pose(model, pose, kQuaternionTolerance); }

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

std::vector<Vec3> place(const PosedHand& hand, const SurfaceSamples& samples) {
    std::vector<Vec3> out;
    out.reserve(samples.points.size());
    for (const auto& p : samples.points) out.push_back(hand.to_world(p));
    return out;
}

}  // namespace

void LossWeights::validate() const {
    for (double v : {trans, joints, rotation, chamfer, spen, pen, dist, alpha_pen, alpha_dist, alpha_spen,
                     penetration_scale, spen_min_separation})
        if (!(v >= 0.0)) throw ValidationError("loss weights must be non-negative");
    if (!(contact_threshold > 0.0)) throw ValidationError("contact threshold tau must be > 0");
    if (!(smooth_l1_beta > 0.0)) throw ValidationError("smooth-L1 beta must be > 0");
    if (chamfer_samples < 1) throw ValidationError("chamfer sample count must be >= 1");
}

double smooth_l1(double x, double beta) {
    const double a = std::abs(x);
    return a < beta ? 0.5 * x * x / beta : a - 0.5 * beta;
}

double smooth_l1_derivative(double x, double beta) { return std::abs(x) < beta ? x / beta : sign(x); }

double rotation_loss(const Vec4& r, const Vec4& r_hat) {
    if (std::abs(r.norm() - 1.0) > kQuaternionTolerance || std::abs(r_hat.norm() - 1.0) > kQuaternionTolerance)
        throw ValidationError("rotation_loss needs unit quaternions");
    // 1 - |r . r_hat| written as half the squared distance to the nearer of +-r_hat, which is
    // the same on unit quaternions and exactly zero for r_hat = +-r.
    return 0.5 * std::min((r - r_hat).squaredNorm(), (r + r_hat).squaredNorm());
}

namespace {

// Gradient of rotation_loss in ambient R^4.
Vec4 rotation_gradient(const Vec4& r, const Vec4& r_hat) {
    return r.dot(r_hat) >= 0.0 ? Vec4(r - r_hat) : Vec4(r + r_hat);
}

}  // namespace

double translation_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, double beta) {
    const Vec3 span = model.workspace().upper - model.workspace().lower;
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) sum += smooth_l1((g.translation[a] - g_hat.translation[a]) / span[a], beta);
    return sum / 3.0;
}

double joint_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, double beta) {
    if (model.dof() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        sum += smooth_l1((g.joints[i] - g_hat.joints[i]) / model.joints()[j].range(), beta);
    }
    return sum / static_cast<double>(model.dof());
}

double param_term(const HandModel& model, const HandPose& g, const HandPose& g_hat, const LossWeights& w,
                  double weight, VecX* grad) {
    check_pose(model, g);
    check_pose(model, g_hat);
    const double beta = w.smooth_l1_beta;
    const double value = w.trans * translation_loss(model, g, g_hat, beta) +
                         w.joints * joint_loss(model, g, g_hat, beta) +
                         w.rotation * rotation_loss(g.rotation, g_hat.rotation);
    if (grad) {
        const Vec3 span = model.workspace().upper - model.workspace().lower;
        for (int a = 0; a < 3; ++a) {
            const double d = (g.translation[a] - g_hat.translation[a]) / span[a];
            (*grad)[4 + a] += weight * w.trans / 3.0 * smooth_l1_derivative(d, beta) / span[a];
        }
        const double per_joint = model.dof() ? w.joints / static_cast<double>(model.dof()) : 0.0;
        for (std::size_t j = 0; j < model.dof(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            const double range = model.joints()[j].range();
            const double d = (g.joints[i] - g_hat.joints[i]) / range;
            (*grad)[7 + i] += weight * per_joint * smooth_l1_derivative(d, beta) / range;
        }
        grad->segment<4>(0) += weight * w.rotation * rotation_gradient(g.rotation, g_hat.rotation);
    }
    return value;
}

double param_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, const LossWeights& w) {
    return param_term(model, g, g_hat, w, 1.0, nullptr);
}

double pen_term(const PosedHand& hand, const PlacedCapsules& capsules, const ObjectCloud& cloud, double weight,
                std::vector<PointCotangent>* out) {
    const auto& caps = hand.model().capsules();
    const double inv_m = 1.0 / static_cast<double>(cloud.size());
    double sum = 0.0;
    for (const auto& o : cloud.points()) {
        if (capsules.clearly_outside(o)) continue;
        const HandDistance hit = capsules.query(o);
        if (hit.value >= 0.0) continue;
        const double depth = -hit.value;
        sum += depth * depth;
        if (!out) continue;
        const std::size_t c = hit.capsule;
        const Vec3 closest = capsules.a(c) + hit.u * (capsules.b(c) - capsules.a(c));
        const Vec3 offset = o - closest;
        const double len = offset.norm();
        if (len == 0.0) continue;  // on the axis: no defined direction
        const Vec3 g = (weight * inv_m * 2.0 * depth / len) * offset;
        out->push_back({caps[c].link, caps[c].a, (1.0 - hit.u) * g});
        out->push_back({caps[c].link, caps[c].b, hit.u * g});
    }
    return sum * inv_m;
}

double pen_loss(const HandModel& model, const HandPose& g, const ObjectCloud& cloud) {
    check_pose(model, g);
    const PosedHand hand(model, g);
    return pen_term(hand, PlacedCapsules(hand), cloud, 1.0, nullptr);
}

double spen_term(const PosedHand& hand, double min_separation, double weight, std::vector<PointCotangent>* out) {
    const auto& model = hand.model();
    const auto& kps = hand.keypoints();
    double sum = 0.0;
    for (std::size_t i = 0; i < kps.size(); ++i) {
        for (std::size_t j = i + 1; j < kps.size(); ++j) {
            if (!model.pair_checked(static_cast<int>(i), static_cast<int>(j))) continue;
            const Vec3 diff = kps[i] - kps[j];
            const double dist = diff.norm();
            if (dist >= min_separation) continue;
            sum += min_separation - dist;
            if (!out || dist == 0.0) continue;
            const Vec3 g = (weight / dist) * diff;
            const auto& ki = model.keypoints()[i];
            const auto& kj = model.keypoints()[j];
            out->push_back({ki.link, ki.offset, -g});
            out->push_back({kj.link, kj.offset, g});
        }
    }
    return sum;
}

double spen_loss(const HandModel& model, const HandPose& g, double min_separation) {
    check_pose(model, g);
    return spen_term(PosedHand(model, g), min_separation, 1.0, nullptr);
}

std::vector<char> contact_mask(const PosedHand& hand, const ObjectCloud& cloud, double tau) {
    std::vector<char> mask;
    mask.reserve(hand.keypoints().size());
    for (const auto& p : hand.keypoints()) mask.push_back(std::sqrt(cloud.nearest(p).squared_distance) < tau);
    return mask;
}

double dist_term(const PosedHand& hand, const ObjectCloud& cloud, double tau, std::span<const char> anchor,
                 double weight, std::vector<PointCotangent>* out) {
    const auto& kps = hand.keypoints();
    double sum = 0.0;
    for (std::size_t i = 0; i < kps.size(); ++i) {
        const Neighbor nb = cloud.nearest(kps[i]);
        const double d = std::sqrt(nb.squared_distance);
        const bool active = d < tau || (!anchor.empty() && anchor[i]);
        if (!active) continue;
        sum += d;
        if (!out || d == 0.0) continue;
        const auto& kp = hand.model().keypoints()[i];
        out->push_back({kp.link, kp.offset, (weight / d) * (kps[i] - cloud.points()[nb.index])});
    }
    return sum;
}

double van_dist_loss(const HandModel& model, const HandPose& g, const ObjectCloud& cloud, double tau) {
    check_pose(model, g);
    return dist_term(PosedHand(model, g), cloud, tau, {}, 1.0, nullptr);
}

double tta_dist_loss(const HandModel& model, const HandPose& g_ref, const HandPose& g_coarse,
                     const ObjectCloud& cloud, double tau) {
    check_pose(model, g_ref);
    check_pose(model, g_coarse);
    const auto anchor = contact_mask(PosedHand(model, g_coarse), cloud, tau);
    return dist_term(PosedHand(model, g_ref), cloud, tau, anchor, 1.0, nullptr);
}

double chamfer_term(const PosedHand& hand, const SurfaceSamples& samples, std::span<const Vec3> target,
                    double weight, std::vector<PointCotangent>* out) {
    const std::vector<Vec3> pts = place(hand, samples);
    if (pts.empty() || target.empty()) throw ValidationError("chamfer term needs non-empty point sets");
    const double inv_p = 1.0 / static_cast<double>(pts.size());
    const double inv_t = 1.0 / static_cast<double>(target.size());

    std::vector<Vec3> grad(pts.size(), Vec3::Zero());
    double forward = 0.0, backward = 0.0;
    const bool use_tree = pts.size() > 64 || target.size() > 64;
    const KdTree target_tree = use_tree ? KdTree(target) : KdTree();
    const KdTree own_tree = use_tree ? KdTree(pts) : KdTree();

    auto nearest = [&](const Vec3& q, std::span<const Vec3> set, const KdTree& tree) {
        if (use_tree) return tree.nearest(q);
        Neighbor best{0, std::numeric_limits<double>::infinity()};
        for (std::size_t k = 0; k < set.size(); ++k) {
            const double d = (q - set[k]).squaredNorm();
            if (d < best.squared_distance) best = {k, d};
        }
        return best;
    };

    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Neighbor nb = nearest(pts[i], target, target_tree);
        forward += nb.squared_distance;
        grad[i] += 2.0 * inv_p * (pts[i] - target[nb.index]);
    }
    for (std::size_t j = 0; j < target.size(); ++j) {
        const Neighbor nb = nearest(target[j], pts, own_tree);
        backward += nb.squared_distance;
        grad[nb.index] += 2.0 * inv_t * (pts[nb.index] - target[j]);
    }
    if (out)
        for (std::size_t i = 0; i < pts.size(); ++i)
            out->push_back({samples.points[i].link, samples.points[i].local, weight * grad[i]});
    return forward * inv_p + backward * inv_t;
}

double chamfer_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, std::size_t sample_count,
                    std::uint64_t seed) {
    check_pose(model, g);
    check_pose(model, g_hat);
    const SurfaceSamples samples = sample_surface(model, sample_count, seed);
    const auto a = place(PosedHand(model, g), samples);
    const auto b = place(PosedHand(model, g_hat), samples);
    return chamfer_distance(a, b);
}

double ab_tta_loss(const HandModel& model, const HandPose& g_ref, const HandPose& g_coarse,
                   const ObjectCloud& cloud, const LossWeights& w) {
    w.validate();
    return w.alpha_pen * w.penetration_scale * pen_loss(model, g_ref, cloud) +
           w.alpha_dist * tta_dist_loss(model, g_ref, g_coarse, cloud, w.contact_threshold) +
           w.alpha_spen * spen_loss(model, g_ref, w.spen_min_separation);
}

double grasp_loss(const HandModel& model, const HandPose& g, const HandPose& g_hat, const ObjectCloud& cloud,
                  const LossWeights& w) {
    w.validate();
    double value = param_loss(model, g, g_hat, w);
    if (w.chamfer > 0) value += w.chamfer * chamfer_loss(model, g, g_hat, w.chamfer_samples, w.chamfer_seed);
    if (w.spen > 0) value += w.spen * spen_loss(model, g, w.spen_min_separation);
    if (w.pen > 0) value += w.pen * w.penetration_scale * pen_loss(model, g, cloud);
    return value;
}

const char* loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::rotation: return "rotation";
        case LossKind::param: return "param";
        case LossKind::chamfer: return "chamfer";
        case LossKind::pen: return "pen";
        case LossKind::spen: return "spen";
        case LossKind::van_dist: return "van_dist";
        case LossKind::tta_dist: return "tta_dist";
        case LossKind::ab_tta: return "ab_tta";
        case LossKind::grasp: return "grasp";
    }
    return "?";
}

namespace {

const ObjectCloud& need_cloud(const LossInputs& in) {
    if (!in.cloud) throw ValidationError("this loss needs an object cloud");
    return *in.cloud;
}

}  // namespace

ValueAndGradient loss_gradient(LossKind kind, const LossInputs& in) {
    if (!in.model) throw ValidationError("loss inputs need a hand model");
    const HandModel& model = *in.model;
    const LossWeights& w = in.weights;
    w.validate();
    check_pose(model, in.pose);

    ValueAndGradient out;
    out.gradient = VecX::Zero(static_cast<Eigen::Index>(model.parameter_count()));

    if (kind == LossKind::rotation) {
        out.value = rotation_loss(in.pose.rotation, in.reference.rotation);
        out.gradient.segment<4>(0) = rotation_gradient(in.pose.rotation, in.reference.rotation);
        return out;
    }
    if (kind == LossKind::param) {
        out.value = param_term(model, in.pose, in.reference, w, 1.0, &out.gradient);
        return out;
    }

    const PosedHand hand(model, in.pose);
    std::vector<PointCotangent> cot;

    auto chamfer_part = [&](double weight) {
        check_pose(model, in.reference);
        const SurfaceSamples samples = sample_surface(model, w.chamfer_samples, w.chamfer_seed);
        const auto target = place(PosedHand(model, in.reference), samples);
        return chamfer_term(hand, samples, target, weight, &cot);
    };
    auto pen_part = [&](double weight) {
        return pen_term(hand, PlacedCapsules(hand), need_cloud(in), weight, &cot);
    };
    auto anchored_dist = [&](double weight) {
        check_pose(model, in.reference);
        const auto anchor = contact_mask(PosedHand(model, in.reference), need_cloud(in), w.contact_threshold);
        return dist_term(hand, need_cloud(in), w.contact_threshold, anchor, weight, &cot);
    };

    switch (kind) {
        case LossKind::chamfer: out.value = chamfer_part(1.0); break;
        case LossKind::pen: out.value = pen_part(1.0); break;
        case LossKind::spen: out.value = spen_term(hand, w.spen_min_separation, 1.0, &cot); break;
        case LossKind::van_dist:
            out.value = dist_term(hand, need_cloud(in), w.contact_threshold, {}, 1.0, &cot);
            break;
        case LossKind::tta_dist: out.value = anchored_dist(1.0); break;
        case LossKind::ab_tta: {
            const double kp = w.alpha_pen * w.penetration_scale;
            out.value = kp * pen_part(kp) + w.alpha_dist * anchored_dist(w.alpha_dist) +
                        w.alpha_spen * spen_term(hand, w.spen_min_separation, w.alpha_spen, &cot);
            break;
        }
        case LossKind::grasp: {
            out.value = param_term(model, in.pose, in.reference, w, 1.0, &out.gradient);
            if (w.chamfer > 0) out.value += w.chamfer * chamfer_part(w.chamfer);
            if (w.spen > 0) out.value += w.spen * spen_term(hand, w.spen_min_separation, w.spen, &cot);
            if (w.pen > 0) {
                const double kp = w.pen * w.penetration_scale;
                out.value += kp * pen_part(kp);
            }
            break;
        }
        default: break;
    }
    out.gradient += hand.pullback(cot);
    return out;
}

double evaluate_loss(LossKind kind, const LossInputs& in) {
    if (!in.model) throw ValidationError("loss inputs need a hand model");
    const HandModel& model = *in.model;
    const LossWeights& w = in.weights;
    switch (kind) {
        case LossKind::rotation: return rotation_loss(in.pose.rotation, in.reference.rotation);
        case LossKind::param: return param_loss(model, in.pose, in.reference, w);
        case LossKind::chamfer:
            return chamfer_loss(model, in.pose, in.reference, w.chamfer_samples, w.chamfer_seed);
        case LossKind::pen: return pen_loss(model, in.pose, need_cloud(in));
        case LossKind::spen: return spen_loss(model, in.pose, w.spen_min_separation);
        case LossKind::van_dist: return van_dist_loss(model, in.pose, need_cloud(in), w.contact_threshold);
        case LossKind::tta_dist:
            return tta_dist_loss(model, in.pose, in.reference, need_cloud(in), w.contact_threshold);
        case LossKind::ab_tta: return ab_tta_loss(model, in.pose, in.reference, need_cloud(in), w);
        case LossKind::grasp:
            return grasp_loss(model, in.pose, in.reference, in.cloud ? *in.cloud : need_cloud(in), w);
    }
    return 0.0;
}

}  // namespace graspopt
