#include "graspopt/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "graspopt/distance.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/metrics.hpp"

namespace graspopt {

namespace {

VecX joint_values(const HandModel& model, const std::vector<std::pair<std::string, double>>& values) {
    VecX q = VecX::Zero(static_cast<Eigen::Index>(model.dof()));
    for (std::size_t j = 0; j < model.dof(); ++j) q[j] = std::clamp(0.0, model.joints()[j].lower, model.joints()[j].upper);
    for (const auto& [name, v] : values) {
        bool found = false;
        for (std::size_t j = 0; j < model.dof(); ++j)
            if (model.joints()[j].name == name) {
                q[j] = v;
                found = true;
            }
        if (!found) throw ValidationError("grasp template names unknown joint " + name);
    }
    return q;
}

// Smallest signed distance from any cloud point to the capsules in `mask` (all when empty).
double gap(const PosedHand& hand, const ObjectCloud& cloud, const std::vector<char>& mask) {
    const auto& caps = hand.model().capsules();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < caps.size(); ++c) {
        if (!mask.empty() && !mask[c]) continue;
        const Vec3 a = hand.capsule_a(c), b = hand.capsule_b(c);
        for (const auto& p : cloud.points()) best = std::min(best, capsule_signed_distance(p, a, b, caps[c].radius));
    }
    return best;
}

Mat3 frame_facing(const Vec3& approach_local, const Vec3& direction, double roll) {
    // rotation taking the hand's approach axis onto -direction, then rolled about it
    const Vec3 target = -direction.normalized();
    const Eigen::Quaterniond align = Eigen::Quaterniond::FromTwoVectors(approach_local.normalized(), target);
    return Eigen::AngleAxisd(roll, target).toRotationMatrix() * align.toRotationMatrix();
}

}  // namespace

GraspTemplate grasp_template(const HandModel& model) {
    GraspTemplate t;
    if (model.name() == "shadow22") {
        t.approach = Vec3::UnitY();
        t.aim = Vec3(0.0, 0.0, 0.08);
        t.open = joint_values(model, {{"THJ4", 0.0}, {"THJ2", -0.5}});
        std::vector<std::pair<std::string, double>> closed{{"THJ4", 1.222}, {"THJ2", 0.4}, {"THJ1", 0.9}};
        for (const char* f : {"FF", "MF", "RF", "LF"})
            for (auto [j, v] : {std::pair{"J3", 1.4}, {"J2", 1.4}, {"J1", 1.0}}) closed.emplace_back(std::string(f) + j, v);
        t.closed = joint_values(model, closed);
    } else if (model.name() == "pinch2") {
        t.approach = Vec3::UnitZ();
        t.aim = Vec3::Zero();
        t.open = joint_values(model, {{"LJ", -0.5}, {"RJ", -0.5}});
        t.closed = joint_values(model, {{"LJ", 1.0}, {"RJ", 1.0}});
    } else {
        throw ValidationError("no grasp template for hand '" + model.name() + "'");
    }
    return t;
}

std::vector<std::vector<int>> finger_groups(const HandModel& model) {
    std::vector<int> top(model.links().size(), -1);
    for (std::size_t l = 0; l < model.links().size(); ++l) {
        const int parent = model.links()[l].parent;
        if (parent < 0) continue;
        top[l] = model.links()[parent].parent < 0 ? static_cast<int>(l) : top[parent];
    }
    std::vector<std::vector<int>> groups;
    std::vector<int> group_of(model.links().size(), -1);
    for (std::size_t j = 0; j < model.dof(); ++j) {
        const int root_child = top[model.joints()[j].link];
        if (group_of[root_child] < 0) {
            group_of[root_child] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[group_of[root_child]].push_back(static_cast<int>(j));
    }
    return groups;
}

HandPose approach_and_close(const HandModel& model, const GraspTemplate& tmpl, const ObjectCloud& cloud,
                            const Vec3& direction, double roll, double clearance) {
    if (cloud.size() == 0) throw ValidationError("cannot approach an empty cloud");
    const Vec3 center = cloud.centroid();
    const Mat3 rot = frame_facing(tmpl.approach, direction, roll);

    HandPose pose = HandPose::rest(model);
    pose.rotation = matrix_quaternion(rot);
    pose.joints = tmpl.open;
    auto place = [&](double standoff) {
        pose.translation = center - rot * (tmpl.aim + standoff * tmpl.approach.normalized());
    };

    // slide in from outside the bounding sphere in 1 mm steps
    const double step = 0.001;
    double standoff = cloud.bounding_radius() + 0.1;
    place(standoff);
    while (standoff > 0.0) {
        place(standoff - step);
        if (gap(PosedHand(model, pose), cloud, {}) < clearance) {
            place(standoff);
            break;
        }
        standoff -= step;
    }

    const auto& caps = model.capsules();
    for (const auto& group : finger_groups(model)) {
        std::vector<char> mask(caps.size(), 0);
        for (std::size_t c = 0; c < caps.size(); ++c) {
            for (int l = caps[c].link; l >= 0; l = model.links()[l].parent)
                for (int j : group)
                    if (model.joints()[j].link == l) mask[c] = 1;
        }
        constexpr int kSteps = 100;
        for (int s = 1; s <= kSteps; ++s) {
            HandPose next = pose;
            for (int j : group) next.joints[j] = tmpl.open[j] + (tmpl.closed[j] - tmpl.open[j]) * s / kSteps;
            pose = next;
            if (gap(PosedHand(model, pose), cloud, mask) < 0.0) break;
        }
    }
    return pose;
}

GraspCheck check_grasp(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud) {
    GraspCheck c;
    const Q1Params params;
    c.pen_cm = pen_depth(model, pose, cloud);
    c.contacts = contact_count(model, pose, cloud, params.contact_threshold);
    c.q1 = q1(model, pose, cloud, params);
    c.ok = c.pen_cm < 0.5 && c.contacts >= 3 && c.q1 > 0.0;
    return c;
}

std::vector<HandPose> ground_truth_grasps(const HandModel& model, const ObjectCloud& cloud, std::size_t count,
                                          std::uint64_t seed, const TtaConfig& polish, std::size_t attempts) {
    const GraspTemplate tmpl = grasp_template(model);
    Rng rng(seed);
    std::vector<HandPose> out;
    for (std::size_t a = 0; a < attempts && out.size() < count; ++a) {
        const Vec3 dir = rng.unit_vector();
        const double roll = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const HandPose coarse = approach_and_close(model, tmpl, cloud, dir, roll);
        const HandPose refined = refine(model, coarse, cloud, polish).pose;
        if (check_grasp(model, refined, cloud).ok) out.push_back(refined);
    }
    return out;
}

HandPose perturb_grasp(const HandModel& model, const HandPose& grasp, Rng& rng, double closing, double angle) {
    const GraspTemplate tmpl = grasp_template(model);
    HandPose out = grasp;
    for (std::size_t j = 0; j < model.dof(); ++j)
        out.joints[j] += rng.uniform(0.0, closing) * (tmpl.closed[j] - tmpl.open[j]);
    clamp_joints(model, out);
    const Vec3 axis = rng.unit_vector();
    const Vec4 delta = matrix_quaternion(axis_angle_matrix(axis, rng.uniform(0.0, angle)));
    out.rotation = quaternion_product(delta, grasp.rotation).normalized();
    return out;
}

std::vector<FixtureObject> fixture_objects(std::size_t points, std::uint64_t seed) {
    std::vector<FixtureObject> out;
    for (ShapeKind kind : {ShapeKind::sphere, ShapeKind::box, ShapeKind::cylinder}) {
        ShapeSpec shape;
        shape.kind = kind;
        out.push_back({shape_name(kind), shape, synth_object(shape, points, seed + out.size())});
    }
    return out;
}

}  // namespace graspopt
