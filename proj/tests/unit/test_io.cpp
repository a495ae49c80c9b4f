#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "graspopt/errors.hpp"
#include "graspopt/io.hpp"
#include "testing.hpp"

using namespace graspopt;
using testing::shipped_hand;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("graspopt_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string grasp_doc(const std::string& r, const std::string& extra = "", const std::string& q = "[0.1, 0.2]") {
    return R"({"schema_version": 1, "hand": "pinch2", )" + extra + R"("grasps": [{"r": )" + r +
           R"(, "t": [0, 0, 0.1], "q": )" + q + "}]}";
}

}  // namespace

TEST_CASE("grasp set round trip is exact") {
    const HandModel& shadow = shipped_hand("shadow22");
    Rng rng(81);
    GraspSetFile set;
    set.hand = "shadow22";
    ObjectRef obj;
    obj.name = "ball";
    obj.shape = ShapeSpec{};
    set.object = obj;
    for (int i = 0; i < 50; ++i) {
        set.poses.push_back(testing::random_pose(shadow, rng));
        set.meta.push_back({"coarse", {{"pen", rng.uniform()}, {"dist", rng.uniform() * 1e-7}}});
    }
    const GraspSetFile back = parse_grasp_set(dump_grasp_set(set), shadow);
    REQUIRE(back.poses.size() == set.poses.size());
    for (std::size_t i = 0; i < set.poses.size(); ++i) {
        CHECK((back.poses[i].rotation - set.poses[i].rotation).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((back.poses[i].translation - set.poses[i].translation).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((back.poses[i].joints - set.poses[i].joints).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(back.meta[i].source == "coarse");
        CHECK(back.meta[i].losses == set.meta[i].losses);
    }
    REQUIRE(back.object);
    CHECK(back.object->name == "ball");
    CHECK(back.object->synthetic());
    CHECK(dump_grasp_set(back) == dump_grasp_set(set));
}

TEST_CASE("grasp set quaternion policy") {
    const HandModel& pinch = shipped_hand("pinch2");
    std::vector<std::string> warnings;

    auto set = parse_grasp_set(grasp_doc("[1.0000000001, 0, 0, 0]"), pinch, &warnings);
    CHECK(warnings.empty());
    CHECK(set.poses[0].rotation[0] == 1.0000000001);

    set = parse_grasp_set(grasp_doc("[1.0000005, 0, 0, 0]"), pinch, &warnings);
    CHECK(warnings.size() == 1);
    CHECK(set.poses[0].rotation.norm() == doctest::Approx(1.0).epsilon(1e-15));

    const std::string msg = error_of([&] { parse_grasp_set(grasp_doc("[1.000002, 0, 0, 0]"), pinch); });
    CHECK(msg.find("grasps[0].r") != std::string::npos);
    CHECK_THROWS_AS(parse_grasp_set(grasp_doc("[1.000002, 0, 0, 0]"), pinch), ValidationError);
}

TEST_CASE("grasp set validation") {
    const HandModel& pinch = shipped_hand("pinch2");
    const auto deg = parse_grasp_set(grasp_doc("[1, 0, 0, 0]", R"("angle_unit": "deg", )", "[90, -18]"), pinch);
    CHECK(deg.poses[0].joints[0] == doctest::Approx(std::numbers::pi / 2));
    CHECK(deg.poses[0].joints[1] == doctest::Approx(-std::numbers::pi / 10));

    CHECK(error_of([&] { parse_grasp_set(grasp_doc("[1, 0, 0, 0]", "", "[0.1]"), pinch); }).find("grasps[0].q") !=
          std::string::npos);
    CHECK(error_of([&] { parse_grasp_set(grasp_doc("[1, 0, 0, 0]", R"("colour": 1, )"), pinch); })
              .find("colour") != std::string::npos);
    CHECK_THROWS_AS(parse_grasp_set(grasp_doc("[1, 0, 0, 0]", R"("angle_unit": "grad", )"), pinch), ParseError);
    CHECK_THROWS_AS(parse_grasp_set("{not json", pinch), ParseError);
    CHECK_THROWS_AS(parse_grasp_set(R"({"schema_version": 2, "hand": "pinch2", "grasps": []})", pinch), ParseError);
    CHECK(grasp_set_hand(grasp_doc("[1, 0, 0, 0]")) == "pinch2");
    CHECK(parse_grasp_set(grasp_doc("[1, 0, 0, 0]"), pinch).meta.empty());
}

TEST_CASE("run config parsing") {
    const fs::path dir = scratch("config");
    write_file_atomic(dir / "cloud.xyz", "0 0 0\n0 0 0.01\n");
    const std::string base = R"("hand": "pinch2", "objects": [{"file": "cloud.xyz"}, {"shape": "box", "size": [0.1, 0.1, 0.1]}])";

    const RunConfig cfg = parse_run_config(
        "{\"seed\": 3, " + base +
            R"(, "loss_weights": {"spen": 2}, "schedule": {"dmt_epochs": 4, "smpt": {"pen": 7}}, "tta": {"steps": 9}})",
        dir);
    CHECK(cfg.seed == 3);
    CHECK(cfg.objects.size() == 2);
    CHECK(cfg.objects[0].name == "cloud");
    CHECK(cfg.objects[0].file == (dir / "cloud.xyz").string());
    CHECK(cfg.objects[1].name == "box");
    CHECK(cfg.schedule.dmt_epochs == 4);
    CHECK(cfg.schedule.dmt.spen == 2);
    CHECK(cfg.schedule.smw.spen == 2);
    CHECK(cfg.schedule.smpt.pen == 7);
    CHECK(cfg.schedule.smpt.dist == 10);
    CHECK(cfg.schedule.dmt.pen == 0);
    CHECK(cfg.tta.steps == 9);
    CHECK(cfg.tta.weights.spen == 2);

    CHECK(error_of([&] { parse_run_config("{" + base + "}", dir); }).find("seed") != std::string::npos);
    CHECK(error_of([&] { parse_run_config("{\"seed\": 1, \"sede\": 2, " + base + "}", dir); }).find("sede") !=
          std::string::npos);
    CHECK(error_of([&] {
              parse_run_config(R"({"seed": 1, "hand": "pinch2", "objects": [{"file": "missing.ply"}]})", dir);
          }).find("missing.ply") != std::string::npos);
    CHECK(error_of([&] {
              parse_run_config("{\"seed\": 1, " + base + R"(, "tta": {"steps": 1, "stepsize": 2}})", dir);
          }).find("tta.stepsize") != std::string::npos);
    CHECK_THROWS_AS(parse_run_config(R"({"seed": 1, "hand": "nohand", "objects": [{"shape": "sphere"}]})", dir),
                    ValidationError);
    CHECK_THROWS_AS(parse_run_config("{\"seed\": -1, " + base + "}", dir), ParseError);
    CHECK_THROWS_AS(parse_run_config("{\"seed\": 1, " + base + R"(, "schedule": {"step_size": 0}})", dir),
                    ValidationError);

    // output_dir does not enter the canonical form
    RunConfig a = cfg;
    a.output_dir = "elsewhere";
    CHECK(canonical_run_config(a) == canonical_run_config(cfg));
    a.seed = 4;
    CHECK(canonical_run_config(a) != canonical_run_config(cfg));
}

TEST_CASE("objects and hands resolve") {
    CHECK(load_hand("pinch2").dof() == 2);
    CHECK(load_hand(std::string(GRASPOPT_CONFIG_DIR) + "/shadow22.json").dof() == 22);
    CHECK_THROWS_AS(load_hand("nohand"), ValidationError);

    ObjectRef ref;
    ref.shape = ShapeSpec{};
    ref.points = 300;
    const ObjectCloud base = load_object(ref);
    const ObjectCloud scaled = load_object(ref, 2.0);
    for (std::size_t i = 0; i < base.size(); i += 37) {
        CHECK((scaled.points()[i] - 2.0 * base.points()[i]).norm() < 1e-15);
        CHECK(scaled.normals()[i] == base.normals()[i]);
    }
}

TEST_CASE("artifact helpers") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    const fs::path dir = scratch("atomic");
    write_file_atomic(dir / "sub" / "a.txt", "one");
    write_file_atomic(dir / "sub" / "a.txt", "two");
    CHECK(read_text_file(dir / "sub" / "a.txt") == "two");
    CHECK(std::distance(fs::directory_iterator(dir / "sub"), fs::directory_iterator{}) == 1);
    CHECK_THROWS_AS(read_text_file(dir / "none"), ValidationError);

    TrainTrace trace;
    trace.epochs.push_back({});
    trace.epochs[0].epoch = 1;
    const std::string csv = train_trace_csv(trace);
    CHECK(csv.rfind("epoch,stage,total,param,chamfer,spen,pen,dist,instability,similarity,mean_pen_cm,max_pen_cm,"
                    "hungarian_solves\n1,dmt,",
                    0) == 0);

    MetricsReport report;
    report.grasps = {{0.25, 0.1, 4}};
    report.mean_q1 = 0.25;
    report.eta_np = 100;
    report.delta_t = 6.25;
    const ReportRow row = parse_metrics_row(dump_metrics(report, "mine"), "fallback");
    CHECK(row.method == "mine");
    CHECK(row.q1 == 0.25);
    CHECK(row.delta_t == 6.25);
    CHECK(parse_metrics_row(dump_metrics(report, ""), "fallback").method == "fallback");
    CHECK(report_markdown({row}).find("| mine | 0.2500 | 100.0 | 0.0 | - | 0.000 | 6.25 |") != std::string::npos);
}
