#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "graspopt/cloud.hpp"
#include "graspopt/kinematics.hpp"

namespace graspopt {

struct Q1Params {
    double contact_threshold = 0.01;      ///< meters
    double penetration_threshold = 0.005; ///< meters
    double friction = 0.5;
    int cone_edges = 8;
    int directions = 1024;                ///< sampled wrench-space directions
    double torque_scale = 0.0;            ///< 0: use 1 / object bounding radius
    std::size_t surface_samples = 512;    ///< hand surface samples used to find contacts
    std::uint64_t seed = 0;               ///< seeds the surface and direction samples
    bool refine = true;                   ///< polish the sampled minimum by walking hull facets

    void validate() const;
};

struct Contact {
    Vec3 point;   ///< on the object
    Vec3 normal;  ///< outward object normal
};

using Wrenches = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Object points nearest to the hand surface samples lying within the contact threshold,
/// deduplicated, in ascending object-point index.
std::vector<Contact> find_contacts(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud,
                                   const Q1Params& params);

/// Friction-cone edge wrenches (force, torque_scale * (p - center) x force). Each edge has unit
/// normal component along the inward normal and tangential magnitude mu. The cone's first edge
/// points from the contact toward the mean of all contacts, projected onto the tangent plane,
/// so the set transforms with the configuration.
Wrenches contact_wrenches(std::span<const Contact> contacts, const Vec3& center, double torque_scale,
                          double friction, int cone_edges);

/// Radius of the largest origin-centred ball inside the convex hull of `w` (0 when the origin
/// is not interior). Sampled support directions give an upper estimate; with `refine` the best
/// directions seed a facet walk (ray shooting by LP, then re-shooting along the hit facet's
/// normal), whose facet distances converge to the exact radius.
double q1_from_wrenches(const Wrenches& w, int directions, std::uint64_t seed, bool refine);

/// Q1 of a grasp: 0 when max penetration exceeds the threshold or fewer than 3 contacts exist.
/// Throws ValidationError when the cloud has no normals.
double q1(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud, const Q1Params& params);

/// Maximal penetration depth of object points into the hand, in centimeters.
double pen_depth(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud);

/// Keypoints within `tau` of the cloud.
int contact_count(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud, double tau);

struct GraspMetrics {
    double q1 = 0.0;
    double pen_depth_cm = 0.0;
    int contacts = 0;  ///< keypoints within the contact threshold
};

struct SetRatios {
    double eta_np = 0.0;  ///< % of grasps with penetration below the threshold
    double eta_tb = 0.0;  ///< % of grasps with Q1 > 0
};

SetRatios set_ratios(std::span<const GraspMetrics> grasps, double penetration_threshold_cm = 0.5);

/// xi near-uniform unit directions (Fibonacci lattice).
std::vector<Vec3> fibonacci_sphere(int count);

/// Occupied translation-direction bins (direction of t - center, nearest Fibonacci bin) / xi * 100.
double delta_t(std::span<const HandPose> poses, const Vec3& center, int xi = 16);
/// Distinct XYZ-Euler bin triples / xi * 100, capped at 100.
double delta_r(std::span<const HandPose> poses, int xi = 16);
/// Distinct joint bin tuples / xi * 100, capped at 100.
double delta_q(const HandModel& model, std::span<const HandPose> poses, int xi = 16);

/// Flattened pose used for similarity: quaternion sign-aligned to `reference`, translation and
/// joints normalized to (0, 1) and centred by subtracting 0.5.
VecX similarity_vector(const HandModel& model, const HandPose& pose, const Vec4& reference);

/// Mean cosine similarity over unordered pairs (1 for a single pose).
double pose_similarity(const HandModel& model, std::span<const HandPose> poses);

/// Indices of the k best grasps: most contacts first, then least penetration, then index.
std::vector<int> select_top_k(const HandModel& model, std::span<const HandPose> poses, const ObjectCloud& cloud,
                              int k, double tau = 0.01);

struct MetricsReport {
    std::vector<GraspMetrics> grasps;
    double eta_np = 0.0;
    double eta_tb = 0.0;
    double mean_q1 = 0.0;
    double mean_pen_depth_cm = 0.0;
    double mean_contacts = 0.0;
    double delta_t = 0.0;
    double delta_r = 0.0;
    double delta_q = 0.0;
    double similarity = 0.0;
};

MetricsReport evaluate_set(const HandModel& model, std::span<const HandPose> poses, const ObjectCloud& cloud,
                           const Q1Params& params, int xi = 16);

}  // namespace graspopt
