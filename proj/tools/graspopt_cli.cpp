// graspopt: command-line front end for refinement, evaluation, toy training and matching.
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "graspopt/dsmt.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/fixtures.hpp"
#include "graspopt/io.hpp"
#include "graspopt/matching.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/tta.hpp"

namespace fs = std::filesystem;
using namespace graspopt;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    double scale = 1.0;
    std::string out;
    int jobs = 1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Run config JSON")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Override the run seed");
    app->add_option("--scale", c.scale, "Multiply object cloud coordinates (e.g. 0.001 for mm files)")
        ->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "Output directory (default: config output_dir, else ./graspopt_out)");
}

// Collects outputs and writes them atomically, then the manifest.
class Outputs {
public:
    Outputs(std::string command, fs::path dir) : dir_(std::move(dir)) { manifest_.command = std::move(command); }

    void input(const std::string& role, const std::string& content) { manifest_.inputs[role] = sha256_hex(content); }
    void input_file(const std::string& role, const fs::path& path) { input(role, read_text_file(path)); }

    void write(const std::string& name, const std::string& content) {
        write_file_atomic(dir_ / name, content);
        manifest_.outputs[name] = sha256_hex(content);
    }

    void finish(std::uint64_t seed, const std::string& settings) {
        manifest_.seed = seed;
        manifest_.config_sha256 = sha256_hex(settings);
        write_file_atomic(dir_ / "manifest.json", dump_manifest(manifest_));
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    Manifest manifest_;
};

RunConfig base_config(const Common& c) {
    RunConfig cfg;
    if (!c.config.empty()) cfg = load_run_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

fs::path output_dir(const Common& c, const RunConfig& cfg) {
    if (!c.out.empty()) return c.out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return "graspopt_out";
}

struct LoadedSet {
    HandModel model;
    GraspSetFile set;
    ObjectRef object;
};

// Loads a grasp-set file with its hand; the object comes from --cloud or the file's own reference.
LoadedSet load_set(const std::string& path, const std::string& cloud_override, Outputs& out,
                   const std::string& role) {
    const std::string text = read_text_file(path);
    out.input(role, text);
    const std::string hand = grasp_set_hand(text);
    HandModel model = load_hand(hand);
    out.input_file("hand", resolve_hand_path(hand));
    std::vector<std::string> warnings;
    GraspSetFile set = parse_grasp_set(text, model, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    ObjectRef object;
    if (!cloud_override.empty()) {
        object.file = cloud_override;
        object.name = fs::path(cloud_override).stem().string();
    } else if (set.object) {
        object = *set.object;
        if (!object.synthetic() && fs::path(object.file).is_relative())
            object.file = (fs::path(path).parent_path() / object.file).string();
    } else {
        throw ValidationError(path + ": grasp set names no object; pass --cloud");
    }
    if (!object.synthetic()) {
        if (!fs::is_regular_file(object.file)) throw ValidationError("cannot open cloud file: " + object.file);
        out.input_file("cloud", object.file);
    }
    return {std::move(model), std::move(set), std::move(object)};
}

std::string settings_hash_input(const RunConfig& cfg, const json& options) {
    return canonical_run_config(cfg) + "\n" + options.dump();
}

// ---------------------------------------------------------------------------

struct RefineArgs {
    Common common;
    std::string grasps;
    std::string cloud;
    std::optional<int> steps;
    std::optional<double> translation_scale;
    bool vanilla = false;
};

int cmd_refine(const RefineArgs& a) {
    RunConfig cfg = base_config(a.common);
    TtaConfig tta = cfg.tta;
    if (a.steps) tta.steps = *a.steps;
    if (a.translation_scale) tta.translation_scale = *a.translation_scale;
    if (a.vanilla) tta.vanilla = true;
    tta.validate();

    Outputs out("refine", output_dir(a.common, cfg));
    if (!a.common.config.empty()) out.input_file("config", a.common.config);
    LoadedSet in = load_set(a.grasps, a.cloud, out, "grasps");
    const ObjectCloud cloud = load_object(in.object, a.common.scale);

    const TtaSetResult result = refine_set(in.model, in.set.poses, cloud, tta);

    GraspSetFile refined;
    refined.hand = in.set.hand;
    refined.object = in.set.object;
    for (const TtaResult& r : result.grasps) {
        refined.poses.push_back(r.pose);
        PoseMeta meta;
        meta.source = tta.vanilla ? "vanilla-tta" : "ab-tta";
        meta.losses = {{"initial", r.initial_loss}, {"final", r.final_loss}};
        refined.meta.push_back(std::move(meta));
    }
    json summary = {{"grasps", result.grasps.size()},
                    {"mean_initial_loss", result.summary.mean_initial_loss},
                    {"mean_final_loss", result.summary.mean_final_loss},
                    {"converged", result.summary.converged},
                    {"diverged", result.summary.diverged}};
    json stops = json::array();
    for (const auto& r : result.grasps) stops.push_back(stop_name(r.stop));
    summary["stops"] = stops;

    out.write("refined.json", dump_grasp_set(refined));
    out.write("refine_trace.csv", refine_trace_csv(result.grasps));
    out.write("refine_summary.json", summary.dump(2) + "\n");
    out.finish(cfg.seed, settings_hash_input(cfg, {{"command", "refine"},
                                                   {"steps", tta.steps},
                                                   {"translation_scale", tta.translation_scale},
                                                   {"vanilla", tta.vanilla},
                                                   {"scale", a.common.scale}}));
    std::cout << "refined " << result.grasps.size() << " grasps: mean loss " << result.summary.mean_initial_loss
              << " -> " << result.summary.mean_final_loss << " (" << out.dir().string() << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    Common common;
    std::string grasps;
    std::string cloud;
    std::string label;
    int xi = 16;
};

int cmd_evaluate(const EvaluateArgs& a) {
    RunConfig cfg = base_config(a.common);
    Q1Params q1 = cfg.q1;
    if (a.common.seed) q1.seed = *a.common.seed;

    Outputs out("evaluate", output_dir(a.common, cfg));
    if (!a.common.config.empty()) out.input_file("config", a.common.config);
    LoadedSet in = load_set(a.grasps, a.cloud, out, "grasps");
    const ObjectCloud cloud = load_object(in.object, a.common.scale);
    const std::string label = a.label.empty() ? fs::path(a.grasps).stem().string() : a.label;

    const MetricsReport report = evaluate_set(in.model, in.set.poses, cloud, q1, a.xi);
    out.write("metrics.json", dump_metrics(report, label));
    out.write("metrics.csv", metrics_csv(report));
    out.finish(cfg.seed, settings_hash_input(cfg, {{"command", "evaluate"},
                                                   {"label", label},
                                                   {"xi", a.xi},
                                                   {"q1_seed", q1.seed},
                                                   {"scale", a.common.scale}}));
    std::cout << report_markdown({parse_metrics_row(dump_metrics(report, label), label)});
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    Common common;
};

struct ObjectRun {
    std::vector<HandPose> ground_truths;
    DsmtResult dsmt;
    MetricsReport metrics;
    double gt_similarity = 0.0;
};

int cmd_train(const TrainArgs& a) {
    if (a.common.config.empty()) throw ValidationError("train-toy needs --config");
    const RunConfig cfg = base_config(a.common);
    const HandModel model = load_hand(cfg.hand);

    Outputs out("train-toy", output_dir(a.common, cfg));
    out.input_file("config", a.common.config);
    out.input_file("hand", resolve_hand_path(cfg.hand));
    std::vector<ObjectCloud> clouds;
    for (const auto& ref : cfg.objects) {
        if (!ref.synthetic()) out.input_file("cloud:" + ref.name, ref.file);
        clouds.push_back(load_object(ref, a.common.scale));
    }

    // Objects are independent; each worker owns its slot, so results do not depend on scheduling.
    const std::size_t n = cfg.objects.size();
    std::vector<ObjectRun> runs(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const std::uint64_t seed = cfg.seed + 1000 * i;
                ObjectRun& run = runs[i];
                run.ground_truths = ground_truth_grasps(model, clouds[i], cfg.train.ground_truths, seed, cfg.tta,
                                                        cfg.train.gt_attempts);
                if (run.ground_truths.empty())
                    throw RuntimeError("object " + cfg.objects[i].name + ": no acceptable ground-truth grasp found");
                run.gt_similarity = pose_similarity(model, run.ground_truths);
                const ToyTask task{&model, &clouds[i], run.ground_truths};
                GraspTable table =
                    init_table(model, clouds[i].centroid(), cfg.train.table_size, cfg.train.init_radius, seed + 1);
                run.dsmt = run_dsmt(task, std::move(table), cfg.schedule);
                run.metrics = evaluate_set(model, run.dsmt.table.poses(model), clouds[i], cfg.q1);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(a.common.jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    json summary = json::object();
    for (std::size_t i = 0; i < n; ++i) {
        const ObjectRef& ref = cfg.objects[i];
        const ObjectRun& run = runs[i];
        const std::string dir = ref.name + "/";
        GraspSetFile gts{cfg.hand, ref, run.ground_truths, {}};
        GraspSetFile preds{cfg.hand, ref, run.dsmt.table.poses(model), {}};
        for (std::size_t k = 0; k < preds.poses.size(); ++k) preds.meta.push_back({"dsmt", {}});
        out.write(dir + "ground_truth.json", dump_grasp_set(gts));
        out.write(dir + "predictions.json", dump_grasp_set(preds));
        out.write(dir + "trace.csv", train_trace_csv(run.dsmt.trace));
        out.write(dir + "static_matching.json", dump_assignment(run.dsmt.static_matching));
        out.write(dir + "metrics.json", dump_metrics(run.metrics, ref.name));
        const EpochRecord& last = run.dsmt.trace.epochs.back();
        summary[ref.name] = {{"ground_truths", run.ground_truths.size()},
                             {"ground_truth_similarity", run.gt_similarity},
                             {"final_similarity", last.similarity},
                             {"final_mean_pen_cm", last.mean_pen_cm},
                             {"final_max_pen_cm", last.max_pen_cm},
                             {"static_matching_cost", run.dsmt.static_matching.total_cost},
                             {"epochs", run.dsmt.trace.epochs.size()}};
        std::cout << ref.name << ": " << run.ground_truths.size() << " ground truths, similarity "
                  << last.similarity << ", mean pen " << last.mean_pen_cm << " cm\n";
    }
    out.write("summary.json", summary.dump(2) + "\n");
    out.finish(cfg.seed, settings_hash_input(cfg, {{"command", "train-toy"}, {"scale", a.common.scale}}));
    return 0;
}

// ---------------------------------------------------------------------------

struct MatchArgs {
    Common common;
    std::string predictions;
    std::string ground_truths;
};

int cmd_match(const MatchArgs& a) {
    const RunConfig cfg = base_config(a.common);
    Outputs out("match", output_dir(a.common, cfg));
    if (!a.common.config.empty()) out.input_file("config", a.common.config);

    const std::string pred_text = read_text_file(a.predictions);
    const std::string gt_text = read_text_file(a.ground_truths);
    out.input("predictions", pred_text);
    out.input("ground_truths", gt_text);
    const std::string hand = grasp_set_hand(pred_text);
    if (grasp_set_hand(gt_text) != hand) throw ValidationError("grasp sets refer to different hands");
    const HandModel model = load_hand(hand);
    std::vector<std::string> warnings;
    const GraspSetFile preds = parse_grasp_set(pred_text, model, &warnings);
    const GraspSetFile gts = parse_grasp_set(gt_text, model, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    const CostMatrix cost =
        cost_matrix(model, preds.poses, gts.poses, cfg.cost_weights, cfg.loss_weights.smooth_l1_beta);
    const Assignment assignment = hungarian(cost);
    out.write("assignment.json", dump_assignment(assignment));
    out.finish(cfg.seed, settings_hash_input(cfg, {{"command", "match"}}));
    std::cout << assignment.pairs.size() << " pairs, total cost " << assignment.total_cost << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
    Common common;
    std::vector<std::string> metrics;
};

int cmd_report(const ReportArgs& a) {
    const RunConfig cfg = base_config(a.common);
    Outputs out("report", output_dir(a.common, cfg));
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        const std::string text = read_text_file(a.metrics[i]);
        out.input("metrics[" + std::to_string(i) + "]", text);
        const fs::path p(a.metrics[i]);
        const std::string fallback = p.stem() == "metrics" ? p.parent_path().filename().string() : p.stem().string();
        rows.push_back(parse_metrics_row(text, fallback));
    }
    const std::string table = report_markdown(rows);
    out.write("report.md", table);
    out.write("report.csv", report_csv(rows));
    out.finish(cfg.seed, settings_hash_input(cfg, {{"command", "report"}}));
    std::cout << table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grasp-pose refinement, evaluation and set-matching toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    RefineArgs refine;
    auto* r = app.add_subcommand("refine", "Refine coarse grasps with anchored penetration/contact descent");
    add_common(r, refine.common);
    r->add_option("grasps", refine.grasps, "Grasp-set JSON")->required();
    r->add_option("--cloud", refine.cloud, "Object cloud (PLY/OBJ/XYZ); overrides the file's object");
    r->add_option("--steps", refine.steps, "Descent steps")->check(CLI::PositiveNumber);
    r->add_option("--translation-scale", refine.translation_scale, "Translation gradient scale in [0, 1]");
    r->add_flag("--vanilla", refine.vanilla, "Unanchored distance term (Pen+VDis ablation)");

    EvaluateArgs evaluate;
    auto* e = app.add_subcommand("evaluate", "Compute Q1, penetration, success ratios and diversity");
    add_common(e, evaluate.common);
    e->add_option("grasps", evaluate.grasps, "Grasp-set JSON")->required();
    e->add_option("--cloud", evaluate.cloud, "Object cloud; overrides the file's object");
    e->add_option("--label", evaluate.label, "Method name in the report (default: file stem)");
    e->add_option("--xi", evaluate.xi, "Diversity bin count")->check(CLI::PositiveNumber);

    TrainArgs train;
    auto* t = app.add_subcommand("train-toy", "Run dynamic/static matching training on per-object grasp tables");
    add_common(t, train.common);
    t->add_option("--jobs", train.common.jobs, "Objects trained concurrently")->check(CLI::PositiveNumber);

    MatchArgs match;
    auto* m = app.add_subcommand("match", "Optimal assignment between two grasp sets");
    add_common(m, match.common);
    m->add_option("predictions", match.predictions, "Prediction grasp-set JSON")->required();
    m->add_option("ground_truths", match.ground_truths, "Ground-truth grasp-set JSON")->required();

    ReportArgs report;
    auto* p = app.add_subcommand("report", "Merge metrics files into one summary table");
    add_common(p, report.common);
    p->add_option("metrics", report.metrics, "metrics.json files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*r) return cmd_refine(refine);
        if (*e) return cmd_evaluate(evaluate);
        if (*t) return cmd_train(train);
        if (*m) return cmd_match(match);
        if (*p) return cmd_report(report);
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const StructuralError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "runtime error: " << err.what() << "\n";
        return 2;
    }
    return 1;
}
