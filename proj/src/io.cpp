#include "graspopt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "graspopt/errors.hpp"

namespace graspopt {

using nlohmann::json;

namespace {

// Key-checked view of one JSON object. Every read marks its key; finish() rejects the rest.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ParseError(label() + ": expected an object");
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        if (!has(key)) throw ParseError(path(key) + ": missing required field");
        return j_.at(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        out = as_number(j_.at(key), path(key));
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ParseError(path(key) + ": expected an integer");
        out = v.get<int>();
    }

    void count(const std::string& key, std::size_t& out) {
        if (!has(key)) return;
        out = static_cast<std::size_t>(as_unsigned(j_.at(key), path(key)));
    }

    void seed(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        out = as_unsigned(j_.at(key), path(key));
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        if (!j_.at(key).is_boolean()) throw ParseError(path(key) + ": expected true or false");
        out = j_.at(key).get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        if (!j_.at(key).is_string()) throw ParseError(path(key) + ": expected a string");
        out = j_.at(key).get<std::string>();
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ParseError(path(item.key()) + ": unknown field");
    }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ParseError(where + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ParseError(where + ": not finite");
        return x;
    }

    static std::uint64_t as_unsigned(const json& v, const std::string& where) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ParseError(where + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

private:
    std::string label() const { return where_.empty() ? "document" : where_; }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

json parse_document(const std::string& document, const std::string& what) {
    try {
        return json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

VecX number_array(const json& v, const std::string& where, std::optional<std::size_t> expected) {
    if (!v.is_array()) throw ParseError(where + ": expected an array");
    if (expected && v.size() != *expected)
        throw ValidationError(where + ": expected " + std::to_string(*expected) + " values, got " +
                              std::to_string(v.size()));
    VecX out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = Fields::as_number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

json to_array(const VecX& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

// ---------------------------------------------------------------------------

ObjectRef parse_object(const json& j, const std::string& where) {
    Fields f(j, where);
    ObjectRef ref;
    f.string("name", ref.name);
    f.number("scale", ref.scale);
    if (!(ref.scale > 0)) throw ValidationError(f.path("scale") + ": must be > 0");
    const bool has_file = f.has("file");
    const bool has_shape = f.has("shape");
    if (has_file == has_shape) throw ParseError(where + ": give exactly one of 'file' or 'shape'");
    if (has_file) {
        f.string("file", ref.file);
        if (ref.name.empty()) ref.name = std::filesystem::path(ref.file).stem().string();
    } else {
        std::string kind;
        f.string("shape", kind);
        ShapeSpec shape;
        try {
            shape.kind = parse_shape_kind(kind);
        } catch (const Error&) {
            throw ParseError(f.path("shape") + ": unknown shape '" + kind + "'");
        }
        f.number("radius", shape.radius);
        f.number("height", shape.height);
        if (f.has("size")) shape.size = number_array(f.at("size"), f.path("size"), 3);
        if (!(shape.radius > 0 && shape.height > 0 && (shape.size.array() > 0).all()))
            throw ValidationError(where + ": shape dimensions must be > 0");
        f.count("points", ref.points);
        if (ref.points == 0) throw ValidationError(f.path("points") + ": must be > 0");
        f.seed("seed", ref.seed);
        ref.shape = shape;
        if (ref.name.empty()) ref.name = kind;
    }
    f.finish();
    return ref;
}

json object_json(const ObjectRef& ref) {
    json j;
    j["name"] = ref.name;
    j["scale"] = ref.scale;
    if (ref.synthetic()) {
        const ShapeSpec& s = *ref.shape;
        j["shape"] = shape_name(s.kind);
        if (s.kind == ShapeKind::box) j["size"] = to_array(s.size);
        else j["radius"] = s.radius;
        if (s.kind == ShapeKind::cylinder) j["height"] = s.height;
        j["points"] = ref.points;
        j["seed"] = ref.seed;
    } else {
        j["file"] = ref.file;
    }
    return j;
}

void parse_loss_weights(const json& j, const std::string& where, LossWeights& w) {
    Fields f(j, where);
    f.number("trans", w.trans);
    f.number("joints", w.joints);
    f.number("rotation", w.rotation);
    f.number("chamfer", w.chamfer);
    f.number("spen", w.spen);
    f.number("pen", w.pen);
    f.number("dist", w.dist);
    f.number("alpha_pen", w.alpha_pen);
    f.number("alpha_dist", w.alpha_dist);
    f.number("alpha_spen", w.alpha_spen);
    f.number("contact_threshold", w.contact_threshold);
    f.number("smooth_l1_beta", w.smooth_l1_beta);
    f.number("spen_min_separation", w.spen_min_separation);
    f.number("penetration_scale", w.penetration_scale);
    f.count("chamfer_samples", w.chamfer_samples);
    f.seed("chamfer_seed", w.chamfer_seed);
    f.finish();
}

json loss_weights_json(const LossWeights& w) {
    return {{"trans", w.trans},
            {"joints", w.joints},
            {"rotation", w.rotation},
            {"chamfer", w.chamfer},
            {"spen", w.spen},
            {"pen", w.pen},
            {"dist", w.dist},
            {"alpha_pen", w.alpha_pen},
            {"alpha_dist", w.alpha_dist},
            {"alpha_spen", w.alpha_spen},
            {"contact_threshold", w.contact_threshold},
            {"smooth_l1_beta", w.smooth_l1_beta},
            {"spen_min_separation", w.spen_min_separation},
            {"penetration_scale", w.penetration_scale},
            {"chamfer_samples", w.chamfer_samples},
            {"chamfer_seed", w.chamfer_seed}};
}

void parse_q1(const json& j, Q1Params& q) {
    Fields f(j, "q1");
    f.number("contact_threshold", q.contact_threshold);
    f.number("penetration_threshold", q.penetration_threshold);
    f.number("friction", q.friction);
    f.integer("cone_edges", q.cone_edges);
    f.integer("directions", q.directions);
    f.number("torque_scale", q.torque_scale);
    f.count("surface_samples", q.surface_samples);
    f.seed("seed", q.seed);
    f.boolean("refine", q.refine);
    f.finish();
}

json q1_json(const Q1Params& q) {
    return {{"contact_threshold", q.contact_threshold}, {"penetration_threshold", q.penetration_threshold},
            {"friction", q.friction},                   {"cone_edges", q.cone_edges},
            {"directions", q.directions},               {"torque_scale", q.torque_scale},
            {"surface_samples", q.surface_samples},     {"seed", q.seed},
            {"refine", q.refine}};
}

void parse_tta(const json& j, TtaConfig& t) {
    Fields f(j, "tta");
    f.integer("steps", t.steps);
    f.number("step_size", t.step_size);
    f.number("translation_scale", t.translation_scale);
    f.number("tolerance", t.tolerance);
    f.integer("divergence_patience", t.divergence_patience);
    f.boolean("vanilla", t.vanilla);
    f.finish();
}

json tta_json(const TtaConfig& t) {
    return {{"steps", t.steps},
            {"step_size", t.step_size},
            {"translation_scale", t.translation_scale},
            {"tolerance", t.tolerance},
            {"divergence_patience", t.divergence_patience},
            {"vanilla", t.vanilla}};
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fixed(double x, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

ObjectCloud load_object(const ObjectRef& ref, double extra_scale) {
    const double scale = ref.scale * extra_scale;
    if (!(scale > 0)) throw ValidationError("object scale must be > 0");
    if (!ref.synthetic()) return load_cloud(ref.file, scale);
    ObjectCloud cloud = synth_object(*ref.shape, ref.points, ref.seed);
    if (scale == 1.0) return cloud;
    std::vector<Vec3> points = cloud.points();
    for (auto& p : points) p *= scale;
    return ObjectCloud(std::move(points), cloud.normals());
}

std::filesystem::path resolve_hand_path(const std::string& ref) {
    if (ref.empty()) throw ValidationError("hand: no hand config given");
    const std::filesystem::path direct(ref);
    if (std::filesystem::is_regular_file(direct)) return direct;
    if (direct.extension().empty() && ref.find('/') == std::string::npos) {
        const char* env = std::getenv("GRASPOPT_CONFIG_DIR");
        const std::filesystem::path dir = env ? env : GRASPOPT_CONFIG_DIR;
        const auto shipped = dir / (ref + ".json");
        if (std::filesystem::is_regular_file(shipped)) return shipped;
    }
    throw ValidationError("hand config not found: " + ref);
}

HandModel load_hand(const std::string& ref) { return load_hand_config_file(resolve_hand_path(ref)); }

// ---------------------------------------------------------------------------

std::string grasp_set_hand(const std::string& document) {
    const json j = parse_document(document, "grasp set");
    if (!j.is_object() || !j.contains("hand") || !j["hand"].is_string())
        throw ParseError("hand: missing required field");
    return j["hand"].get<std::string>();
}

GraspSetFile parse_grasp_set(const std::string& document, const HandModel& model,
                             std::vector<std::string>* warnings) {
    const json j = parse_document(document, "grasp set");
    Fields f(j, "");
    const json& version = f.at("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
        throw ParseError("schema_version: unsupported version " + version.dump());
    GraspSetFile set;
    f.string("hand", set.hand);
    if (set.hand.empty()) throw ParseError("hand: missing required field");
    if (f.has("object")) set.object = parse_object(f.at("object"), "object");
    std::string unit = "rad";
    f.string("angle_unit", unit);
    if (unit != "rad" && unit != "deg") throw ParseError("angle_unit: expected 'rad' or 'deg'");
    const double to_rad = unit == "deg" ? std::numbers::pi / 180.0 : 1.0;

    const json& grasps = f.at("grasps");
    if (!grasps.is_array()) throw ParseError("grasps: expected an array");
    bool any_meta = false;
    for (std::size_t i = 0; i < grasps.size(); ++i) {
        const std::string where = "grasps[" + std::to_string(i) + "]";
        Fields g(grasps[i], where);
        HandPose pose;
        pose.rotation = number_array(g.at("r"), g.path("r"), 4);
        pose.translation = number_array(g.at("t"), g.path("t"), 3);
        pose.joints = number_array(g.at("q"), g.path("q"), model.dof()) * to_rad;
        const double norm = pose.rotation.norm();
        if (std::abs(norm - 1.0) > 1e-6)
            throw ValidationError(g.path("r") + ": quaternion norm " + fmt(norm) + " is not unit within 1e-6");
        if (std::abs(norm - 1.0) > 1e-9) {
            pose.rotation /= norm;
            if (warnings) warnings->push_back(g.path("r") + ": renormalized quaternion (norm " + fmt(norm) + ")");
        }
        PoseMeta meta;
        if (g.has("source")) {
            g.string("source", meta.source);
            any_meta = true;
        }
        if (g.has("losses")) {
            const json& losses = g.at("losses");
            if (!losses.is_object()) throw ParseError(g.path("losses") + ": expected an object");
            for (const auto& item : losses.items())
                meta.losses[item.key()] = Fields::as_number(item.value(), g.path("losses." + item.key()));
            any_meta = true;
        }
        g.finish();
        set.poses.push_back(std::move(pose));
        set.meta.push_back(std::move(meta));
    }
    if (!any_meta) set.meta.clear();
    f.finish();
    return set;
}

std::string dump_grasp_set(const GraspSetFile& set) {
    if (!set.meta.empty() && set.meta.size() != set.poses.size())
        throw ValidationError("grasp set metadata must have one entry per pose");
    json j;
    j["schema_version"] = kSchemaVersion;
    j["hand"] = set.hand;
    j["angle_unit"] = "rad";
    if (set.object) j["object"] = object_json(*set.object);
    json grasps = json::array();
    for (std::size_t i = 0; i < set.poses.size(); ++i) {
        const HandPose& p = set.poses[i];
        json g;
        g["r"] = to_array(p.rotation);
        g["t"] = to_array(p.translation);
        g["q"] = to_array(p.joints);
        if (!set.meta.empty()) {
            if (!set.meta[i].source.empty()) g["source"] = set.meta[i].source;
            if (!set.meta[i].losses.empty()) g["losses"] = set.meta[i].losses;
        }
        grasps.push_back(std::move(g));
    }
    j["grasps"] = std::move(grasps);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

RunConfig parse_run_config(const std::string& document, const std::filesystem::path& base_dir) {
    const json j = parse_document(document, "run config");
    Fields f(j, "");
    RunConfig cfg;
    if (!f.has("seed")) throw ParseError("seed: missing required field");
    f.seed("seed", cfg.seed);

    f.string("hand", cfg.hand);
    if (cfg.hand.empty()) throw ParseError("hand: missing required field");
    {
        const std::filesystem::path candidate = base_dir / cfg.hand;
        if (std::filesystem::is_regular_file(candidate)) cfg.hand = candidate.string();
        resolve_hand_path(cfg.hand);
    }

    const json& objects = f.at("objects");
    if (!objects.is_array() || objects.empty()) throw ParseError("objects: expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string where = "objects[" + std::to_string(i) + "]";
        ObjectRef ref = parse_object(objects[i], where);
        if (!ref.synthetic()) {
            const std::filesystem::path p = std::filesystem::path(ref.file).is_absolute()
                                                ? std::filesystem::path(ref.file)
                                                : base_dir / ref.file;
            if (!std::filesystem::is_regular_file(p)) throw ValidationError(where + ".file: not found: " + p.string());
            ref.file = p.string();
        }
        if (!names.insert(ref.name).second) throw ValidationError(where + ".name: duplicate object name " + ref.name);
        cfg.objects.push_back(std::move(ref));
    }

    if (f.has("loss_weights")) parse_loss_weights(f.at("loss_weights"), "loss_weights", cfg.loss_weights);
    if (f.has("cost_weights")) {
        Fields c(f.at("cost_weights"), "cost_weights");
        c.number("trans", cfg.cost_weights.trans);
        c.number("joints", cfg.cost_weights.joints);
        c.number("rotation", cfg.cost_weights.rotation);
        c.finish();
    }

    // Stage weights start from the shared loss weights; SMPT adds its penetration and distance terms.
    StageSchedule& s = cfg.schedule;
    s.dmt = s.smw = s.smpt = cfg.loss_weights;
    s.smpt.pen = 50.0;
    s.smpt.dist = 10.0;
    s.cost = cfg.cost_weights;
    if (f.has("schedule")) {
        Fields sf(f.at("schedule"), "schedule");
        sf.integer("dmt_epochs", s.dmt_epochs);
        sf.integer("smw_epochs", s.smw_epochs);
        sf.integer("smpt_epochs", s.smpt_epochs);
        sf.integer("steps_per_epoch", s.steps_per_epoch);
        sf.number("step_size", s.step_size);
        sf.number("max_gradient_norm", s.max_gradient_norm);
        if (sf.has("dmt")) parse_loss_weights(sf.at("dmt"), "schedule.dmt", s.dmt);
        if (sf.has("smw")) parse_loss_weights(sf.at("smw"), "schedule.smw", s.smw);
        if (sf.has("smpt")) parse_loss_weights(sf.at("smpt"), "schedule.smpt", s.smpt);
        sf.finish();
    }

    cfg.tta.weights = cfg.loss_weights;
    if (f.has("tta")) parse_tta(f.at("tta"), cfg.tta);
    if (f.has("q1")) parse_q1(f.at("q1"), cfg.q1);
    if (f.has("train")) {
        Fields t(f.at("train"), "train");
        t.count("table_size", cfg.train.table_size);
        t.number("init_radius", cfg.train.init_radius);
        t.count("ground_truths", cfg.train.ground_truths);
        t.count("gt_attempts", cfg.train.gt_attempts);
        t.finish();
        if (cfg.train.table_size == 0 || cfg.train.ground_truths == 0)
            throw ValidationError("train: table_size and ground_truths must be > 0");
        if (!(cfg.train.init_radius > 0)) throw ValidationError("train.init_radius: must be > 0");
    }
    f.string("output_dir", cfg.output_dir);
    f.finish();

    cfg.loss_weights.validate();
    cfg.cost_weights.validate();
    cfg.schedule.validate();
    cfg.tta.validate();
    cfg.q1.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_text_file(path), path.parent_path());
}

std::string canonical_run_config(const RunConfig& cfg) {
    json objects = json::array();
    for (const auto& o : cfg.objects) objects.push_back(object_json(o));
    const StageSchedule& s = cfg.schedule;
    json j = {{"seed", cfg.seed},
              {"hand", cfg.hand},
              {"objects", objects},
              {"loss_weights", loss_weights_json(cfg.loss_weights)},
              {"cost_weights",
               {{"trans", cfg.cost_weights.trans},
                {"joints", cfg.cost_weights.joints},
                {"rotation", cfg.cost_weights.rotation}}},
              {"schedule",
               {{"dmt_epochs", s.dmt_epochs},
                {"smw_epochs", s.smw_epochs},
                {"smpt_epochs", s.smpt_epochs},
                {"steps_per_epoch", s.steps_per_epoch},
                {"step_size", s.step_size},
                {"max_gradient_norm", s.max_gradient_norm},
                {"dmt", loss_weights_json(s.dmt)},
                {"smw", loss_weights_json(s.smw)},
                {"smpt", loss_weights_json(s.smpt)}}},
              {"tta", tta_json(cfg.tta)},
              {"q1", q1_json(cfg.q1)},
              {"train",
               {{"table_size", cfg.train.table_size},
                {"init_radius", cfg.train.init_radius},
                {"ground_truths", cfg.train.ground_truths},
                {"gt_attempts", cfg.train.gt_attempts}}}};
    return j.dump();
}

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw RuntimeError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw RuntimeError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw RuntimeError("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

std::string dump_manifest(const Manifest& m) {
    json j = {{"graspopt_version", kVersion},
              {"schema_version", kSchemaVersion},
              {"command", m.command},
              {"seed", m.seed},
              {"config_sha256", m.config_sha256},
              {"inputs", m.inputs},
              {"outputs", m.outputs},
              {"versions",
               {{"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
    return j.dump(2) + "\n";
}

std::string refine_trace_csv(const std::vector<TtaResult>& results) {
    std::string out = "grasp,step,loss,pen,dist,spen,max_pen_cm,contacts\n";
    for (std::size_t g = 0; g < results.size(); ++g)
        for (const TtaStep& s : results[g].trace)
            out += std::to_string(g) + "," + std::to_string(s.step) + "," + fmt(s.loss) + "," + fmt(s.pen) + "," +
                   fmt(s.dist) + "," + fmt(s.spen) + "," + fmt(s.max_pen_cm) + "," + std::to_string(s.contacts) +
                   "\n";
    return out;
}

std::string train_trace_csv(const TrainTrace& trace) {
    std::string out =
        "epoch,stage,total,param,chamfer,spen,pen,dist,instability,similarity,mean_pen_cm,max_pen_cm,"
        "hungarian_solves\n";
    for (const EpochRecord& r : trace.epochs)
        out += std::to_string(r.epoch) + "," + stage_name(r.stage) + "," + fmt(r.total) + "," + fmt(r.param) + "," +
               fmt(r.chamfer) + "," + fmt(r.spen) + "," + fmt(r.pen) + "," + fmt(r.dist) + "," +
               fmt(r.instability) + "," + fmt(r.similarity) + "," + fmt(r.mean_pen_cm) + "," + fmt(r.max_pen_cm) +
               "," + std::to_string(r.hungarian_solves) + "\n";
    return out;
}

std::string dump_assignment(const Assignment& a) {
    json pairs = json::array();
    for (const auto& [p, g] : a.pairs) pairs.push_back({{"prediction", p}, {"ground_truth", g}});
    json j = {{"schema_version", kSchemaVersion},
              {"prediction_count", a.prediction_count},
              {"ground_truth_count", a.ground_truth_count},
              {"pairs", pairs},
              {"unmatched_predictions", a.unmatched_predictions},
              {"unmatched_ground_truths", a.unmatched_ground_truths},
              {"total_cost", a.total_cost}};
    return j.dump(2) + "\n";
}

std::string dump_metrics(const MetricsReport& r, const std::string& label) {
    json grasps = json::array();
    for (const auto& g : r.grasps)
        grasps.push_back({{"q1", g.q1}, {"pen_depth_cm", g.pen_depth_cm}, {"contacts", g.contacts}});
    json j = {{"schema_version", kSchemaVersion},
              {"label", label},
              {"count", r.grasps.size()},
              {"eta_np", r.eta_np},
              {"eta_tb", r.eta_tb},
              {"mean_q1", r.mean_q1},
              {"mean_pen_depth_cm", r.mean_pen_depth_cm},
              {"mean_contacts", r.mean_contacts},
              {"delta_t", r.delta_t},
              {"delta_r", r.delta_r},
              {"delta_q", r.delta_q},
              {"similarity", r.similarity},
              {"grasps", grasps}};
    return j.dump(2) + "\n";
}

std::string metrics_csv(const MetricsReport& r) {
    std::string out = "grasp,q1,pen_depth_cm,contacts\n";
    for (std::size_t i = 0; i < r.grasps.size(); ++i)
        out += std::to_string(i) + "," + fmt(r.grasps[i].q1) + "," + fmt(r.grasps[i].pen_depth_cm) + "," +
               std::to_string(r.grasps[i].contacts) + "\n";
    return out;
}

ReportRow parse_metrics_row(const std::string& document, const std::string& fallback_label) {
    const json j = parse_document(document, "metrics report");
    if (!j.is_object()) throw ParseError("metrics report: expected an object");
    auto number = [&](const char* key) {
        if (!j.contains(key)) throw ParseError(std::string(key) + ": missing required field");
        return Fields::as_number(j[key], key);
    };
    ReportRow row;
    row.method = j.contains("label") && j["label"].is_string() && !j["label"].get<std::string>().empty()
                     ? j["label"].get<std::string>()
                     : fallback_label;
    row.q1 = number("mean_q1");
    row.eta_np = number("eta_np");
    row.eta_tb = number("eta_tb");
    row.pen_cm = number("mean_pen_depth_cm");
    row.delta_t = number("delta_t");
    row.delta_r = number("delta_r");
    row.delta_q = number("delta_q");
    return row;
}

// Success rate needs a physics simulator and is left blank.
std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out = "method,q1,eta_np,eta_tb,eta_success,pen_cm,delta_t,delta_r,delta_q\n";
    for (const auto& r : rows)
        out += r.method + "," + fmt(r.q1) + "," + fmt(r.eta_np) + "," + fmt(r.eta_tb) + ",," + fmt(r.pen_cm) + "," +
               fmt(r.delta_t) + "," + fmt(r.delta_r) + "," + fmt(r.delta_q) + "\n";
    return out;
}

std::string report_markdown(const std::vector<ReportRow>& rows) {
    std::string out =
        "| Method | Q1 | eta_np (%) | eta_tb (%) | eta_success (%) | Pen. (cm) | delta_t (%) | delta_r (%) | "
        "delta_q (%) |\n|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
        out += "| " + r.method + " | " + fixed(r.q1, 4) + " | " + fixed(r.eta_np, 1) + " | " + fixed(r.eta_tb, 1) +
               " | - | " + fixed(r.pen_cm, 3) + " | " + fixed(r.delta_t, 2) + " | " + fixed(r.delta_r, 2) + " | " +
               fixed(r.delta_q, 2) + " |\n";
    return out;
}

}  // namespace graspopt
