#include <doctest.h>

#include "graspopt/dsmt.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/synth.hpp"
#include "testing.hpp"

using namespace graspopt;
using testing::shipped_hand;

namespace {

const ObjectCloud& small_sphere() {
    static const ObjectCloud cloud = [] {
        ShapeSpec s;
        s.radius = 0.03;
        return synth_object(s, 300, 5);
    }();
    return cloud;
}

HandPose pinch_at(const Vec3& t, double joint) {
    const HandModel& model = shipped_hand("pinch2");
    HandPose p = HandPose::rest(model);
    p.translation = t;
    p.joints.setConstant(joint);
    return p;
}

StageSchedule quick(int t0, int t1, int t2) {
    StageSchedule s;
    s.dmt_epochs = t0;
    s.smw_epochs = t1;
    s.smpt_epochs = t2;
    s.steps_per_epoch = 10;
    return s;
}

}  // namespace

TEST_CASE("table initialisation") {
    const HandModel& model = shipped_hand("shadow22");
    const GraspTable t = init_table(model, Vec3::Zero(), 16, 0.2, 3);
    REQUIRE(t.size() == 16);
    const auto poses = t.poses(model);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK(std::abs(poses[i].translation.norm() - 0.2) < 1e-9);
        CHECK(std::abs(poses[i].joints[0] - model.joints()[0].mid()) < 1e-12);
        for (std::size_t j = i + 1; j < poses.size(); ++j) {
            const std::vector<HandPose> pair{poses[i], poses[j]};
            CHECK(pose_similarity(model, pair) < 0.99);
        }
    }
    CHECK(init_table(model, Vec3::Zero(), 1, 0.2, 3).poses(model)[0].translation ==
          init_table(model, Vec3::Zero(), 1, 0.2, 3).poses(model)[0].translation);
    CHECK(init_table(model, Vec3::Zero(), 4, 0.2, 4).poses(model)[0].translation != poses[0].translation);
    CHECK_THROWS_AS(init_table(model, Vec3::Zero(), 0, 0.2, 3), ValidationError);
    CHECK_THROWS_AS(init_table(model, Vec3::Zero(), 4, 0.5, 3), ValidationError);
}

TEST_CASE("dynamic epoch at the optimum does nothing") {
    const HandModel& model = shipped_hand("pinch2");
    GraspTable table = init_table(model, Vec3::Zero(), 3, 0.1, 7);
    const GraspTable before = table;
    const ToyTask task{&model, &small_sphere(), table.poses(model)};
    const StageSchedule s = quick(1, 0, 0);
    const EpochResult r = dmt_epoch(table, task, s.dmt, s);
    CHECK(r.record.total == 0.0);
    CHECK(r.record.hungarian_solves == 1);
    for (std::size_t i = 0; i < table.size(); ++i) {
        CHECK(table.logits[i].translation == before.logits[i].translation);
        CHECK(table.logits[i].joints == before.logits[i].joints);
        CHECK(r.assignment.ground_truth_for(static_cast<int>(i)) == static_cast<int>(i));
    }
}

TEST_CASE("a single ground truth moves exactly one prediction") {
    const HandModel& model = shipped_hand("pinch2");
    GraspTable table = init_table(model, Vec3::Zero(), 2, 0.1, 8);
    const GraspTable before = table;
    const ToyTask task{&model, &small_sphere(), {pinch_at({0, 0, -0.08}, 0.3)}};
    const StageSchedule s = quick(1, 0, 0);
    const EpochResult r = dmt_epoch(table, task, s.dmt, s);
    REQUIRE(r.assignment.pairs.size() == 1);
    const int moved = r.assignment.pairs[0].first;
    CHECK(table.logits[moved].translation != before.logits[moved].translation);
    CHECK(table.logits[1 - moved].translation == before.logits[1 - moved].translation);
    CHECK(table.logits[1 - moved].rotation == before.logits[1 - moved].rotation);
}

TEST_CASE("dynamic training decreases the loss") {
    const HandModel& model = shipped_hand("pinch2");
    const ToyTask task{&model, &small_sphere(), {pinch_at({0, 0, -0.07}, 0.2), pinch_at({0.02, 0.0, 0.07}, 0.3)}};
    for (const auto& g : task.ground_truths) REQUIRE(spen_loss(model, g) == 0.0);
    StageSchedule s = quick(10, 0, 0);
    s.steps_per_epoch = 20;
    s.step_size = 0.02;
    const DsmtResult r = run_dsmt(task, init_table(model, Vec3::Zero(), 2, 0.12, 9), s);
    REQUIRE(r.trace.epochs.size() == 10);
    for (std::size_t e = 1; e < 10; ++e) CHECK(r.trace.epochs[e].total < r.trace.epochs[e - 1].total);
    CHECK(r.static_matching.pairs.empty());
}

TEST_CASE("static stages reuse the snapshot") {
    const HandModel& model = shipped_hand("pinch2");
    const ToyTask task{&model,
                       &small_sphere(),
                       {pinch_at({0, 0, -0.07}, 0.2), pinch_at({0.0, 0.07, 0.0}, 0.5), pinch_at({0.07, 0, 0}, 0.8)}};
    const StageSchedule s = quick(3, 2, 2);
    const DsmtResult r = run_dsmt(task, init_table(model, Vec3::Zero(), 4, 0.12, 10), s);
    REQUIRE(r.trace.epochs.size() == 7);
    CHECK(r.static_matching.pairs.size() == 3);
    for (std::size_t e = 0; e < 7; ++e) {
        const EpochRecord& rec = r.trace.epochs[e];
        CHECK(rec.epoch == static_cast<int>(e) + 1);
        CHECK(rec.hungarian_solves == (e < 3 ? 1 : 0));
        if (e >= 3) CHECK(rec.instability == 0.0);
        CHECK(rec.stage == (e < 3 ? Stage::dmt : e < 5 ? Stage::smw : Stage::smpt));
        CHECK(rec.pen == (e < 5 ? 0.0 : rec.pen));
    }
    CHECK(r.trace.epochs[5].dist >= 0.0);
    for (const auto& p : r.table.poses(model)) {
        CHECK(joints_within_limits(model, p));
        CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-12);
    }

    // determinism
    const DsmtResult again = run_dsmt(task, init_table(model, Vec3::Zero(), 4, 0.12, 10), s);
    for (std::size_t i = 0; i < 4; ++i) CHECK(again.table.logits[i].joints == r.table.logits[i].joints);

    // no solves inside a static epoch, and the frozen assignment must fit
    GraspTable table = r.table;
    const long before = hungarian_call_count();
    smpt_epoch(table, task, r.static_matching, s);
    CHECK(hungarian_call_count() == before);
    const ToyTask fewer{&model, &small_sphere(), {task.ground_truths[0]}};
    CHECK_THROWS_AS(smw_epoch(table, fewer, r.static_matching, s), ValidationError);
}

TEST_CASE("schedule validation") {
    StageSchedule s;
    CHECK(s.smpt.pen == 50.0);
    CHECK(s.smpt.dist == 10.0);
    CHECK(s.dmt.pen == 0.0);
    CHECK(s.total_epochs() == 25);
    s.smw_epochs = -1;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = StageSchedule{};
    s.dmt_epochs = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = StageSchedule{};
    s.steps_per_epoch = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    const HandModel& model = shipped_hand("pinch2");
    const ToyTask empty{&model, &small_sphere(), {}};
    GraspTable t = init_table(model, Vec3::Zero(), 2, 0.1, 1);
    CHECK_THROWS_AS(run_dsmt(empty, t, StageSchedule{}), ValidationError);
}
