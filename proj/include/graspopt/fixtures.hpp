#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/kinematics.hpp"
#include "graspopt/rng.hpp"
#include "graspopt/synth.hpp"
#include "graspopt/tta.hpp"

namespace graspopt {

/// How a hand approaches and wraps an object: the palm-front direction and the palm point the
/// object is aimed at (hand frame), plus open and closed joint vectors.
struct GraspTemplate {
    Vec3 approach = Vec3::UnitZ();
    Vec3 aim = Vec3::Zero();
    VecX open;
    VecX closed;
};

/// Templates for the shipped hands ("shadow22", "pinch2"); throws ValidationError otherwise.
GraspTemplate grasp_template(const HandModel& model);

/// Joint indices grouped by the root child whose subtree they move (one group per finger).
std::vector<std::vector<int>> finger_groups(const HandModel& model);

/// Places the open hand on the ray from the cloud centroid along `direction` (palm facing the
/// object, rotated by `roll` about the ray), slides it in until the surface gap drops below
/// `clearance`, then closes each finger group until it touches the cloud.
HandPose approach_and_close(const HandModel& model, const GraspTemplate& tmpl, const ObjectCloud& cloud,
                            const Vec3& direction, double roll, double clearance = 0.002);

struct GraspCheck {
    double pen_cm = 0.0;
    int contacts = 0;
    double q1 = 0.0;
    bool ok = false;  ///< pen below 0.5 cm, >= 3 keypoint contacts, q1 > 0
};

GraspCheck check_grasp(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud);

/// Accepted grasps from dispersed approach directions, each polished by `polish`. Stops after
/// `count` grasps or `attempts` tries, whichever comes first.
std::vector<HandPose> ground_truth_grasps(const HandModel& model, const ObjectCloud& cloud, std::size_t count,
                                          std::uint64_t seed, const TtaConfig& polish, std::size_t attempts = 64);

/// A coarse-prediction-like corruption of a good grasp: fingers driven further closed by up to
/// `closing` (fraction of the open-to-closed span), plus a small root rotation of up to `angle` rad.
HandPose perturb_grasp(const HandModel& model, const HandPose& grasp, Rng& rng, double closing = 0.1,
                       double angle = 0.05);

/// One synthetic object of the fixture suite.
struct FixtureObject {
    std::string name;
    ShapeSpec shape;
    ObjectCloud cloud;
};

/// Sphere, box and cylinder clouds at the default sizes.
std::vector<FixtureObject> fixture_objects(std::size_t points = 2000, std::uint64_t seed = 11);

}  // namespace graspopt
