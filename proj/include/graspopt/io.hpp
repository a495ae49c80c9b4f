#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graspopt/cloud.hpp"
#include "graspopt/dsmt.hpp"
#include "graspopt/kinematics.hpp"
#include "graspopt/losses.hpp"
#include "graspopt/matching.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/synth.hpp"
#include "graspopt/tta.hpp"

namespace graspopt {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Objects and hands

/// Either a cloud file or an analytic shape sampled on the fly.
struct ObjectRef {
    std::string name;
    std::string file;                ///< empty for synthetic objects
    std::optional<ShapeSpec> shape;  ///< set for synthetic objects
    std::size_t points = 2000;       ///< synthetic only
    std::uint64_t seed = 11;         ///< synthetic only
    double scale = 1.0;              ///< multiplies coordinates after loading

    bool synthetic() const { return shape.has_value(); }
};

/// Loads or samples the object; `extra_scale` multiplies on top of ref.scale.
ObjectCloud load_object(const ObjectRef& ref, double extra_scale = 1.0);

/// A path to a hand config file, or the name of a shipped config ("shadow22", "pinch2").
std::filesystem::path resolve_hand_path(const std::string& ref);
HandModel load_hand(const std::string& ref);

// ---------------------------------------------------------------------------
// Grasp sets

struct PoseMeta {
    std::string source;                    ///< producing stage ("coarse", "ab-tta", "dsmt", ...)
    std::map<std::string, double> losses;  ///< sorted by name
};

struct GraspSetFile {
    std::string hand;                   ///< hand reference as written in the file
    std::optional<ObjectRef> object;
    std::vector<HandPose> poses;
    std::vector<PoseMeta> meta;         ///< empty, or one entry per pose
};

/// Parses a grasp-set document and checks it against `model` (joint count, finite values).
/// Quaternions further than 1e-6 from unit length are rejected; those off by more than 1e-9
/// are renormalized and reported in `warnings`. Angles may be given in degrees with
/// "angle_unit": "deg" (rotation stays a quaternion; only joints are converted).
GraspSetFile parse_grasp_set(const std::string& document, const HandModel& model,
                             std::vector<std::string>* warnings = nullptr);
/// Reads only the "hand" field, so the right model can be loaded before full parsing.
std::string grasp_set_hand(const std::string& document);
/// Serializes with round-trip precision; angles are always written in radians.
std::string dump_grasp_set(const GraspSetFile& set);

// ---------------------------------------------------------------------------
// Run configuration

struct TrainSettings {
    std::size_t table_size = 16;      ///< N predictions per object
    double init_radius = 0.2;         ///< init_table sphere radius, meters
    std::size_t ground_truths = 32;   ///< M targets per object
    std::size_t gt_attempts = 256;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string hand;                 ///< file path or shipped name
    std::vector<ObjectRef> objects;
    LossWeights loss_weights;
    CostWeights cost_weights;
    StageSchedule schedule;           ///< stage weights are loss_weights plus per-stage overrides
    TtaConfig tta;                    ///< tta.weights = loss_weights
    Q1Params q1;
    TrainSettings train;
    std::string output_dir;
};

/// Parses and validates a run config. Relative file references are resolved against
/// `base_dir`; every referenced file must exist. Unknown keys are rejected by name.
RunConfig parse_run_config(const std::string& document, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (output_dir excluded), the input of the config hash.
std::string canonical_run_config(const RunConfig& config);

// ---------------------------------------------------------------------------
// Artifacts

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& data);

/// Reproducibility record written next to every CLI output set.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_sha256;
    std::map<std::string, std::string> inputs;   ///< name -> sha256
    std::map<std::string, std::string> outputs;  ///< file name -> sha256
};

std::string dump_manifest(const Manifest& manifest);

/// grasp,step,loss,pen,dist,spen,max_pen_cm,contacts
std::string refine_trace_csv(const std::vector<TtaResult>& results);
/// epoch,stage,total,param,chamfer,spen,pen,dist,instability,similarity,mean_pen_cm,max_pen_cm,hungarian_solves
std::string train_trace_csv(const TrainTrace& trace);

std::string dump_assignment(const Assignment& assignment);
std::string dump_metrics(const MetricsReport& report, const std::string& label);
/// grasp,q1,pen_depth_cm,contacts
std::string metrics_csv(const MetricsReport& report);

/// One row of a Table-1-style summary.
struct ReportRow {
    std::string method;
    double q1 = 0.0;
    double eta_np = 0.0;
    double eta_tb = 0.0;
    double pen_cm = 0.0;
    double delta_t = 0.0;
    double delta_r = 0.0;
    double delta_q = 0.0;
};

/// Reads a document produced by dump_metrics.
ReportRow parse_metrics_row(const std::string& document, const std::string& fallback_label);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_markdown(const std::vector<ReportRow>& rows);

}  // namespace graspopt
