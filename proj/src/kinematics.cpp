#include "graspopt/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "graspopt/errors.hpp"
#include "graspopt/rng.hpp"

namespace graspopt {

HandPose HandPose::rest(const HandModel& model) {
    HandPose pose;
    pose.joints = VecX::Zero(static_cast<Eigen::Index>(model.dof()));
    clamp_joints(model, pose);
    return pose;
}

VecX pose_vector(const HandPose& pose) {
    VecX v(7 + pose.joints.size());
    v.segment<4>(0) = pose.rotation;
    v.segment<3>(4) = pose.translation;
    v.tail(pose.joints.size()) = pose.joints;
    return v;
}

HandPose pose_from_vector(const HandModel& model, const VecX& params) {
    if (static_cast<std::size_t>(params.size()) != model.parameter_count())
        throw ValidationError("pose vector has " + std::to_string(params.size()) + " entries, expected " +
                              std::to_string(model.parameter_count()));
    HandPose pose;
    pose.rotation = params.segment<4>(0);
    pose.translation = params.segment<3>(4);
    pose.joints = params.tail(static_cast<Eigen::Index>(model.dof()));
    return pose;
}

void validate_pose(const HandModel& model, const HandPose& pose, double tolerance) {
    if (static_cast<std::size_t>(pose.joints.size()) != model.dof())
        throw ValidationError("pose has " + std::to_string(pose.joints.size()) + " joint angles, hand has " +
                              std::to_string(model.dof()));
    if (!pose_vector(pose).allFinite()) throw ValidationError("pose contains non-finite values");
    const double norm = pose.rotation.norm();
    if (std::abs(norm - 1.0) > tolerance)
        throw ValidationError("rotation quaternion is not unit length (|r| = " + std::to_string(norm) + ")");
}

bool joints_within_limits(const HandModel& model, const HandPose& pose) {
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto& joint = model.joints()[j];
        const double q = pose.joints[static_cast<Eigen::Index>(j)];
        if (q < joint.lower || q > joint.upper) return false;
    }
    return true;
}

void clamp_joints(const HandModel& model, HandPose& pose) {
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto& joint = model.joints()[j];
        auto& q = pose.joints[static_cast<Eigen::Index>(j)];
        q = std::clamp(q, joint.lower, joint.upper);
    }
}

HandFrames evaluate_frames(const HandModel& model, const HandPose& pose) {
    const auto& links = model.links();
    const auto& joints = model.joints();
    HandFrames f;
    f.root.rotation = quaternion_matrix(pose.rotation);
    f.root.translation = pose.translation;
    f.root_partials = quaternion_matrix_partials(pose.rotation);
    f.chain.resize(links.size());
    f.world.resize(links.size());
    f.joint_axes.resize(joints.size());
    f.joint_pivots.resize(joints.size());

    for (int i : model.evaluation_order()) {
        const Link& link = links[i];
        Frame local = link.rest;
        if (link.joint >= 0) {
            const Joint& joint = joints[link.joint];
            local.rotation = local.rotation * axis_angle_matrix(joint.axis, pose.joints[link.joint]);
        }
        f.chain[i] = link.parent >= 0 ? f.chain[link.parent] * local : local;
        f.world[i] = f.root * f.chain[i];
        if (link.joint >= 0) {
            f.joint_axes[link.joint] = f.chain[i].rotation * joints[link.joint].axis;
            f.joint_pivots[link.joint] = f.chain[i].translation;
        }
    }
    return f;
}

std::vector<Frame> forward_kinematics(const HandModel& model, const HandPose& pose) {
    validate_pose(model, pose, 1e-6);
    return evaluate_frames(model, pose).world;
}

namespace {

void orthonormal_basis(const Vec3& axis, Vec3& e1, Vec3& e2) {
    const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = axis.cross(helper).normalized();
    e2 = axis.cross(e1);
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double u = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    return (p - (a + u * ab)).norm();
}

Vec3 sample_on_capsule(const Capsule& cap, Rng& rng) {
    const Vec3 ab = cap.b - cap.a;
    const double length = ab.norm();
    const double lateral = 2.0 * std::numbers::pi * cap.radius * length;
    const double caps = 4.0 * std::numbers::pi * cap.radius * cap.radius;
    const Vec3 axis = length > 0 ? Vec3(ab / length) : Vec3::UnitZ();
    if (rng.uniform() * (lateral + caps) < lateral) {
        Vec3 e1, e2;
        orthonormal_basis(axis, e1, e2);
        const double s = rng.uniform();
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        return cap.a + s * ab + cap.radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
    }
    const Vec3 u = rng.unit_vector();
    const Vec3& end = u.dot(axis) >= 0.0 ? cap.b : cap.a;
    return end + cap.radius * u;
}

}  // namespace

SurfaceSamples sample_surface(const HandModel& model, std::size_t count, std::uint64_t seed) {
    const auto& caps = model.capsules();
    SurfaceSamples out;
    if (caps.empty() || count == 0) return out;
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& c : caps) cumulative.push_back(total += c.area());

    Rng rng(seed);
    out.points.reserve(count);
    while (out.points.size() < count) {
        const double pick = rng.uniform() * total;
        const auto idx = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                     static_cast<std::ptrdiff_t>(caps.size()) - 1));
        const Capsule& cap = caps[idx];
        const Vec3 p = sample_on_capsule(cap, rng);
        bool covered = false;
        for (std::size_t o = 0; o < caps.size() && !covered; ++o) {
            if (o == idx || caps[o].link != cap.link) continue;
            covered = segment_distance(p, caps[o].a, caps[o].b) < caps[o].radius - 1e-12;
        }
        if (!covered) out.points.push_back({cap.link, p});
    }
    return out;
}

HandPoints keypoints_and_surface(const HandModel& model, const HandPose& pose,
                                 std::size_t surface_sample_count, std::uint64_t seed) {
    if (surface_sample_count < 1) throw ValidationError("surface_sample_count must be >= 1");
    validate_pose(model, pose, 1e-6);
    PosedHand hand(model, pose);
    HandPoints out;
    out.keypoints = hand.keypoints();
    const SurfaceSamples samples = sample_surface(model, surface_sample_count, seed);
    out.surface.reserve(samples.points.size());
    for (const auto& p : samples.points) out.surface.push_back(hand.to_world(p));
    return out;
}

VecX pose_pullback(const HandModel& model, const HandFrames& frames, std::span<const PointCotangent> cotangents) {
    VecX grad = VecX::Zero(static_cast<Eigen::Index>(model.parameter_count()));
    const Mat3& rot = frames.root.rotation;
    for (const auto& c : cotangents) {
        const Vec3 y = frames.chain[c.link].apply(c.local);
        for (int k = 0; k < 4; ++k) grad[k] += c.cotangent.dot(frames.root_partials[k] * y);
        grad.segment<3>(4) += c.cotangent;
        const Vec3 local_cot = rot.transpose() * c.cotangent;
        for (int j : model.chain_joints(c.link))
            grad[7 + j] += local_cot.dot(frames.joint_axes[j].cross(y - frames.joint_pivots[j]));
    }
    return grad;
}

VecX pose_pullback(const HandModel& model, const HandPose& pose, std::span<const Vec3> keypoint_cotangents,
                   const SurfaceSamples& samples, std::span<const Vec3> surface_cotangents) {
    if (!keypoint_cotangents.empty() && keypoint_cotangents.size() != model.keypoints().size())
        throw ValidationError("keypoint cotangent count does not match the hand keypoints");
    if (!surface_cotangents.empty() && surface_cotangents.size() != samples.points.size())
        throw ValidationError("surface cotangent count does not match the samples");
    std::vector<PointCotangent> all;
    all.reserve(keypoint_cotangents.size() + surface_cotangents.size());
    for (std::size_t i = 0; i < keypoint_cotangents.size(); ++i) {
        const auto& kp = model.keypoints()[i];
        all.push_back({kp.link, kp.offset, keypoint_cotangents[i]});
    }
    for (std::size_t i = 0; i < surface_cotangents.size(); ++i)
        all.push_back({samples.points[i].link, samples.points[i].local, surface_cotangents[i]});
    return pose_pullback(model, evaluate_frames(model, pose), all);
}

PosedHand::PosedHand(const HandModel& model, const HandPose& pose)
    : model_(&model), pose_(pose), frames_(evaluate_frames(model, pose)) {
    keypoints_.reserve(model.keypoints().size());
    for (const auto& kp : model.keypoints()) keypoints_.push_back(frames_.world[kp.link].apply(kp.offset));
}

Vec3 PosedHand::capsule_a(std::size_t c) const {
    const auto& cap = model_->capsules()[c];
    return frames_.world[cap.link].apply(cap.a);
}

Vec3 PosedHand::capsule_b(std::size_t c) const {
    const auto& cap = model_->capsules()[c];
    return frames_.world[cap.link].apply(cap.b);
}

NormalizeResult normalize_pose(const HandModel& model, const HandPose& pose) {
    validate_pose(model, pose, 1e-6);
    NormalizeResult out;
    out.value.rotation = pose.rotation;
    const auto& box = model.workspace();
    auto squeeze = [&](double x, double lo, double hi) {
        double n = (x - lo) / (hi - lo);
        if (n < 0.0 || n > 1.0) {
            out.saturated = true;
            n = std::clamp(n, 0.0, 1.0);
        }
        return n;
    };
    for (int a = 0; a < 3; ++a)
        out.value.translation[a] = squeeze(pose.translation[a], box.lower[a], box.upper[a]);
    out.value.joints.resize(static_cast<Eigen::Index>(model.dof()));
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto& joint = model.joints()[j];
        out.value.joints[static_cast<Eigen::Index>(j)] =
            squeeze(pose.joints[static_cast<Eigen::Index>(j)], joint.lower, joint.upper);
    }
    return out;
}

HandPose denormalize_pose(const HandModel& model, const NormalizedPose& n) {
    if (static_cast<std::size_t>(n.joints.size()) != model.dof())
        throw ValidationError("normalized pose has the wrong joint count");
    const double norm = n.rotation.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ValidationError("normalized rotation is zero or non-finite");
    HandPose pose;
    pose.rotation = n.rotation / norm;
    const auto& box = model.workspace();
    pose.translation = box.lower + n.translation.cwiseProduct(box.upper - box.lower);
    pose.joints.resize(n.joints.size());
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto& joint = model.joints()[j];
        const auto i = static_cast<Eigen::Index>(j);
        pose.joints[i] = joint.lower + n.joints[i] * joint.range();
    }
    return pose;
}

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double n) {
    n = std::clamp(n, 1e-12, 1.0 - 1e-12);
    return std::log(n / (1.0 - n));
}
}  // namespace

NormalizedPose squash(const PoseLogits& logits) {
    NormalizedPose n;
    n.rotation = logits.rotation;
    n.translation = logits.translation.unaryExpr(&sigmoid);
    n.joints = logits.joints.unaryExpr(&sigmoid);
    return n;
}

PoseLogits unsquash(const NormalizedPose& normalized) {
    PoseLogits z;
    z.rotation = normalized.rotation;
    z.translation = normalized.translation.unaryExpr(&logit);
    z.joints = normalized.joints.unaryExpr(&logit);
    return z;
}

VecX logits_pullback(const HandModel& model, const PoseLogits& logits, const VecX& g) {
    VecX out(g.size());
    const double norm = logits.rotation.norm();
    const Vec4 r = logits.rotation / norm;
    const Vec4 gr = g.segment<4>(0);
    out.segment<4>(0) = (gr - r * r.dot(gr)) / norm;
    const auto& box = model.workspace();
    for (int a = 0; a < 3; ++a) {
        const double s = sigmoid(logits.translation[a]);
        out[4 + a] = g[4 + a] * (box.upper[a] - box.lower[a]) * s * (1.0 - s);
    }
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const double s = sigmoid(logits.joints[i]);
        out[7 + i] = g[7 + i] * model.joints()[j].range() * s * (1.0 - s);
    }
    return out;
}

}  // namespace graspopt
