#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "graspopt/distance.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/synth.hpp"
#include "testing.hpp"
#include "wrench_oracles.hpp"

using namespace graspopt;
using testing::random_pose;
using testing::shipped_hand;

namespace {

ObjectCloud shifted(const ObjectCloud& c, const Mat3& r, const Vec3& t) {
    std::vector<Vec3> p, n;
    for (std::size_t i = 0; i < c.size(); ++i) {
        p.push_back(r * c.points()[i] + t);
        n.push_back(r * c.normals()[i]);
    }
    return ObjectCloud(std::move(p), std::move(n));
}

// pinch2 at rest around a 3 cm sphere resting 5 mm above the palm capsule
ObjectCloud pinch_sphere() {
    ShapeSpec s;
    s.radius = 0.03;
    return shifted(synth_object(s, 2000, 1), Mat3::Identity(), Vec3(0, 0, 0.045));
}

std::vector<Contact> sphere_contacts(Rng& rng, int count, double radius) {
    std::vector<Contact> out;
    for (int i = 0; i < count; ++i) {
        const Vec3 n = rng.unit_vector();
        out.push_back({radius * n, n});
    }
    return out;
}

}  // namespace

TEST_CASE("q1 refinement reaches the exact inscribed radius") {
    Rng rng(61);
    int positive = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const auto contacts = sphere_contacts(rng, 3, 0.04);
        const Wrenches w = contact_wrenches(contacts, Vec3::Zero(), 25.0, 0.5, 8);
        const double exact = testing::facet_enumeration_q1(w);
        const double q = q1_from_wrenches(w, 1024, 0, true);
        CHECK(q == doctest::Approx(exact).epsilon(1e-6).scale(1e-9));
        // plain sampling only ever overestimates
        CHECK(q1_from_wrenches(w, 1024, 0, false) >= q - 1e-12);
        positive += exact > 0;
    }
    CHECK(positive >= 3);
}

TEST_CASE("q1 refinement on symmetric contact layouts") {
    // many facets at nearly equal distance; a single facet walk stalls on the wrong one
    const std::vector<std::vector<Vec3>> layouts = {
        {{1, 0, 0}, {-0.5, 0.866025403784, 0}, {-0.5, -0.866025403784, 0}},
        {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}},
        {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}},
    };
    Rng rng(64);
    for (const auto& layout : layouts)
        for (int k = 0; k < 3; ++k) {
            const Mat3 rot = quaternion_matrix(rng.unit_quaternion());
            std::vector<Contact> contacts;
            for (const Vec3& v : layout) contacts.push_back({0.04 * (rot * v.normalized()), rot * v.normalized()});
            const Wrenches w = contact_wrenches(contacts, Vec3::Zero(), 25.0, 0.5, 4);
            CHECK(q1_from_wrenches(w, 1024, k, true) ==
                  doctest::Approx(testing::facet_enumeration_q1(w)).epsilon(1e-6));
        }
}

TEST_CASE("q1 of degenerate wrench sets") {
    CHECK(q1_from_wrenches(Wrenches(6, 0), 64, 0, true) == 0.0);
    // two antipodal contacts cannot resist torque about the line joining them
    const std::vector<Contact> antipodal{{Vec3(1, 0, 0), Vec3(1, 0, 0)}, {Vec3(-1, 0, 0), Vec3(-1, 0, 0)}};
    const Wrenches w = contact_wrenches(antipodal, Vec3::Zero(), 1.0, 0.5, 8);
    CHECK(q1_from_wrenches(w, 1024, 0, true) == 0.0);
    CHECK(testing::facet_enumeration_q1(w) == 0.0);
}

TEST_CASE("q1 of grasps") {
    const HandModel& pinch = shipped_hand("pinch2");
    const ObjectCloud cloud = pinch_sphere();
    const HandPose rest = HandPose::rest(pinch);
    const Q1Params params;
    const double base = q1(pinch, rest, cloud, params);
    CHECK(base > 0.0);

    // no contacts
    HandPose away = rest;
    away.translation = {0, 0, -0.2};
    CHECK(q1(pinch, away, cloud, params) == 0.0);

    // 6 mm penetration: push the sphere 11 mm down onto the palm capsule (5 mm gap)
    const ObjectCloud deep = shifted(cloud, Mat3::Identity(), Vec3(0, 0, -0.011));
    CHECK(pen_depth(pinch, rest, deep) == doctest::Approx(0.6).epsilon(0.02));
    CHECK(q1(pinch, rest, deep, params) == 0.0);

    CHECK_THROWS_AS(q1(pinch, rest, ObjectCloud({Vec3::Zero()}), params), ValidationError);

    // common rigid transform of hand and object
    Rng rng(62);
    for (int i = 0; i < 5; ++i) {
        const Vec4 g = rng.unit_quaternion();
        const Mat3 rg = quaternion_matrix(g);
        const Vec3 t = 0.1 * rng.unit_vector();
        HandPose moved = rest;
        moved.rotation = quaternion_product(g, rest.rotation).normalized();
        moved.translation = rg * rest.translation + t;
        CHECK(std::abs(q1(pinch, moved, shifted(cloud, rg, t), params) - base) < 1e-6);
    }
}

TEST_CASE("penetration depth") {
    const HandModel& pinch = shipped_hand("pinch2");
    const HandPose rest = HandPose::rest(pinch);
    CHECK(pen_depth(pinch, rest, ObjectCloud({Vec3(0, 0, 0.5)})) == 0.0);
    // 3 mm inside the base capsule (radius 1 cm)
    CHECK(pen_depth(pinch, rest, ObjectCloud({Vec3(0, 0.007, 0)})) == doctest::Approx(0.3).epsilon(1e-9));

    const HandModel& shadow = shipped_hand("shadow22");
    Rng rng(63);
    for (int i = 0; i < 20; ++i) {
        const HandPose pose = random_pose(shadow, rng);
        const ObjectCloud cloud = testing::blob_cloud(pose.translation, 0.08, 300, rng);
        double worst = 0;
        for (const auto& o : cloud.points()) worst = std::max(worst, -signed_distance_to_hand(shadow, pose, o));
        CHECK(pen_depth(shadow, pose, cloud) == doctest::Approx(100 * worst).epsilon(1e-12));
    }
}

TEST_CASE("set ratios") {
    std::vector<GraspMetrics> all(4, GraspMetrics{0.1, 0.0, 5});
    CHECK(set_ratios(all).eta_np == 100.0);
    CHECK(set_ratios(all).eta_tb == 100.0);
    all[2].pen_depth_cm = 0.6;
    CHECK(set_ratios(all).eta_np == 75.0);

    Rng rng(64);
    std::vector<GraspMetrics> mixed;
    int np = 0, tb = 0;
    for (int i = 0; i < 37; ++i) {
        GraspMetrics g{rng.uniform() < 0.4 ? 0.0 : rng.uniform(), rng.uniform(0, 1), 0};
        np += g.pen_depth_cm < 0.5;
        tb += g.q1 > 0;
        mixed.push_back(g);
    }
    CHECK(set_ratios(mixed).eta_np == doctest::Approx(100.0 * np / 37));
    CHECK(set_ratios(mixed).eta_tb == doctest::Approx(100.0 * tb / 37));
}

TEST_CASE("translation diversity") {
    const auto bins = fibonacci_sphere(16);
    for (const auto& b : bins) CHECK(std::abs(b.norm() - 1.0) < 1e-12);
    const HandModel& shadow = shipped_hand("shadow22");
    std::vector<HandPose> one_per_bin;
    for (const auto& b : bins) {
        HandPose p = HandPose::rest(shadow);
        p.translation = 0.1 * b;
        one_per_bin.push_back(p);
    }
    CHECK(delta_t(one_per_bin, Vec3::Zero()) == 100.0);
    const std::vector<HandPose> same(10, one_per_bin[3]);
    CHECK(delta_t(same, Vec3::Zero()) == 6.25);

    Rng rng(65);
    std::vector<HandPose> random;
    for (int i = 0; i < 9; ++i) random.push_back(random_pose(shadow, rng, 0.2));
    std::set<int> used;
    for (const auto& p : random) {
        int best = 0;
        for (int b = 1; b < 16; ++b)
            if ((bins[b] - p.translation.normalized()).norm() < (bins[best] - p.translation.normalized()).norm()) best = b;
        used.insert(best);
    }
    CHECK(delta_t(random, Vec3::Zero()) == 100.0 * used.size() / 16);
    std::vector<HandPose> shuffled(random.rbegin(), random.rend());
    CHECK(delta_t(shuffled, Vec3::Zero()) == delta_t(random, Vec3::Zero()));
}

TEST_CASE("rotation and joint diversity") {
    const HandModel& shadow = shipped_hand("shadow22");
    Rng rng(66);
    const HandPose g = random_pose(shadow, rng);
    const std::vector<HandPose> same(7, g);
    CHECK(delta_r(same) == 6.25);
    CHECK(delta_q(shadow, same) == 6.25);

    // one joint crosses a bin boundary
    HandPose a = HandPose::rest(shadow), b = a;
    const Joint& j0 = shadow.joints()[0];
    const double width = j0.range() / 16;
    a.joints[0] = j0.lower + 4.9 * width;
    b.joints[0] = j0.lower + 5.1 * width;
    const std::vector<HandPose> pair{a, b};
    CHECK(delta_q(shadow, pair) == 12.5);

    std::vector<HandPose> random;
    for (int i = 0; i < 12; ++i) random.push_back(random_pose(shadow, rng));
    std::set<std::array<int, 3>> triples;
    std::set<std::vector<int>> tuples;
    for (const auto& p : random) {
        const Vec3 e = euler_xyz(quaternion_matrix(p.rotation));
        const double pi = std::numbers::pi;
        triples.insert({std::min(15, int((e[0] + pi) / (2 * pi) * 16)), std::min(15, int((e[1] + pi / 2) / pi * 16)),
                        std::min(15, int((e[2] + pi) / (2 * pi) * 16))});
        std::vector<int> t;
        for (std::size_t k = 0; k < 22; ++k)
            t.push_back(std::min(15, int((p.joints[k] - shadow.joints()[k].lower) / shadow.joints()[k].range() * 16)));
        tuples.insert(t);
    }
    CHECK(delta_r(random) == std::min(100.0, 100.0 * triples.size() / 16));
    CHECK(delta_q(shadow, random) == std::min(100.0, 100.0 * tuples.size() / 16));

    // adding a grasp never lowers occupancy
    std::vector<HandPose> grown(random.begin(), random.begin() + 5);
    double previous = delta_r(grown);
    for (std::size_t i = 5; i < random.size(); ++i) {
        grown.push_back(random[i]);
        CHECK(delta_r(grown) >= previous);
        previous = delta_r(grown);
    }
}

TEST_CASE("pose similarity") {
    const HandModel& pinch = shipped_hand("pinch2");
    Rng rng(67);
    const HandPose g = random_pose(pinch, rng);
    HandPose flipped = g;
    flipped.rotation = -g.rotation;
    const std::vector<HandPose> same{g, g, flipped};
    CHECK(pose_similarity(pinch, same) == doctest::Approx(1.0).epsilon(1e-12));

    // orthogonal flattened vectors: rotations orthogonal, translations and joints at the centre
    HandPose a = HandPose::rest(pinch), b = a;
    a.joints << pinch.joints()[0].mid(), pinch.joints()[1].mid();
    b.joints = a.joints;
    b.rotation = {0, 1, 0, 0};
    const std::vector<HandPose> ortho{a, b};
    CHECK(std::abs(pose_similarity(pinch, ortho)) < 1e-12);

    std::vector<HandPose> set;
    for (int i = 0; i < 6; ++i) set.push_back(random_pose(pinch, rng));
    double sum = 0;
    int pairs = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j, ++pairs) {
            const VecX u = similarity_vector(pinch, set[i], set[0].rotation);
            const VecX v = similarity_vector(pinch, set[j], set[0].rotation);
            sum += u.dot(v) / (u.norm() * v.norm());
        }
    CHECK(pose_similarity(pinch, set) == doctest::Approx(sum / pairs).epsilon(1e-12));
    CHECK(pose_similarity(pinch, set) < 0.99);
}

TEST_CASE("top-k selection") {
    const HandModel& pinch = shipped_hand("pinch2");
    const ObjectCloud cloud = pinch_sphere();
    Rng rng(68);
    std::vector<HandPose> set;
    for (int i = 0; i < 10; ++i) set.push_back(testing::perturb(pinch, HandPose::rest(pinch), rng, 0.3, 0.03, 0.5));
    const auto all = select_top_k(pinch, set, cloud, 10);
    CHECK(all.size() == 10);
    std::set<int> distinct(all.begin(), all.end());
    CHECK(distinct.size() == 10);

    struct Key {
        int contacts;
        double pen;
        int index;
    };
    std::vector<Key> keys;
    for (int i = 0; i < 10; ++i) keys.push_back({contact_count(pinch, set[i], cloud, 0.01), pen_depth(pinch, set[i], cloud), i});
    std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
        return x.contacts != y.contacts ? x.contacts > y.contacts : (x.pen != y.pen ? x.pen < y.pen : x.index < y.index);
    });
    for (int i = 0; i < 4; ++i) CHECK(select_top_k(pinch, set, cloud, 4)[i] == keys[i].index);
    CHECK(select_top_k(pinch, set, cloud, 0).empty());
}

TEST_CASE("synthetic objects") {
    ShapeSpec sphere;
    sphere.radius = 1.0;
    const ObjectCloud s = synth_object(sphere, 500, 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s.points()[i].norm() - 1.0) < 1e-12);
        CHECK((s.normals()[i] - s.points()[i]).norm() < 1e-12);
    }

    ShapeSpec box{ShapeKind::box, 0.0, Vec3::Constant(0.1), 0.0};
    const ObjectCloud b = synth_object(box, 500, 4);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Vec3& p = b.points()[i];
        const Vec3& n = b.normals()[i];
        CHECK(std::abs(p.cwiseAbs().maxCoeff() - 0.05) < 1e-15);
        CHECK(n.cwiseAbs().sum() == 1.0);
        CHECK(p.dot(n) == doctest::Approx(0.05));
    }

    ShapeSpec cyl{ShapeKind::cylinder, 0.03, Vec3::Zero(), 0.1};
    const ObjectCloud c = synth_object(cyl, 500, 5);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(shape_signed_distance(cyl, c.points()[i])) < 1e-9);

    const ObjectCloud again = synth_object(cyl, 500, 5);
    CHECK(again.points()[17] == c.points()[17]);
    CHECK_THROWS_AS(parse_shape_kind("torus"), ValidationError);
}
