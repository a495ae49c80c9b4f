#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "graspopt/dsmt.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/fixtures.hpp"
#include "graspopt/io.hpp"
#include "graspopt/losses.hpp"
#include "graspopt/matching.hpp"
#include "graspopt/metrics.hpp"
#include "graspopt/synth.hpp"
#include "graspopt/tta.hpp"

namespace py = pybind11;
using namespace graspopt;

namespace {

std::vector<Vec3> rows(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
    if (m.cols() != 3) throw ValidationError(std::string(what) + ": expected an (n, 3) array");
    std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
    return out;
}

Eigen::MatrixXd matrix(const std::vector<Vec3>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return m;
}

LossKind loss_kind(const std::string& name) {
    for (LossKind k : {LossKind::rotation, LossKind::param, LossKind::chamfer, LossKind::pen, LossKind::spen,
                       LossKind::van_dist, LossKind::tta_dist, LossKind::ab_tta, LossKind::grasp})
        if (name == loss_name(k)) return k;
    throw ValidationError("unknown loss '" + name + "'");
}

LossInputs inputs(const HandModel& model, const HandPose& pose, const std::optional<HandPose>& reference,
                  const ObjectCloud* cloud, const std::optional<LossWeights>& weights) {
    LossInputs in;
    in.model = &model;
    in.pose = pose;
    in.reference = reference ? *reference : pose;
    in.cloud = cloud;
    if (weights) in.weights = *weights;
    return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Grasp-pose optimization toolkit: kinematics, losses, matching, refinement and metrics";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<RuntimeError>(m, "RuntimeError", base.ptr());

    py::class_<HandModel>(m, "HandModel")
        .def_property_readonly("name", &HandModel::name)
        .def_property_readonly("dof", &HandModel::dof)
        .def_property_readonly("parameter_count", &HandModel::parameter_count)
        .def_property_readonly("joint_names",
                               [](const HandModel& h) {
                                   std::vector<std::string> out;
                                   for (const auto& j : h.joints()) out.push_back(j.name);
                                   return out;
                               })
        .def_property_readonly("joint_limits",
                               [](const HandModel& h) {
                                   Eigen::MatrixXd lim(static_cast<Eigen::Index>(h.dof()), 2);
                                   for (std::size_t j = 0; j < h.dof(); ++j)
                                       lim.row(static_cast<Eigen::Index>(j)) << h.joints()[j].lower,
                                           h.joints()[j].upper;
                                   return lim;
                               })
        .def_property_readonly("keypoint_count", [](const HandModel& h) { return h.keypoints().size(); });
    m.def("load_hand", &load_hand, py::arg("ref"), "Hand config by path or shipped name (shadow22, pinch2)");

    py::class_<HandPose>(m, "HandPose")
        .def(py::init([](const Vec4& r, const Vec3& t, const VecX& q) { return HandPose{r, t, q}; }),
             py::arg("rotation"), py::arg("translation"), py::arg("joints"))
        .def_static("rest", &HandPose::rest, py::arg("model"))
        .def_readwrite("rotation", &HandPose::rotation)
        .def_readwrite("translation", &HandPose::translation)
        .def_readwrite("joints", &HandPose::joints)
        .def("vector", [](const HandPose& p) { return pose_vector(p); })
        .def("__repr__", [](const HandPose& p) {
            return "HandPose(t=[" + std::to_string(p.translation.x()) + ", " + std::to_string(p.translation.y()) +
                   ", " + std::to_string(p.translation.z()) + "], J=" + std::to_string(p.joints.size()) + ")";
        });
    m.def("pose_from_vector", &pose_from_vector, py::arg("model"), py::arg("params"));
    m.def("keypoints", [](const HandModel& h, const HandPose& p) { return matrix(PosedHand(h, p).keypoints()); },
          py::arg("model"), py::arg("pose"));

    py::class_<ObjectCloud>(m, "ObjectCloud")
        .def(py::init([](const Eigen::MatrixXd& points, std::optional<Eigen::MatrixXd> normals) {
                 std::optional<std::vector<Vec3>> n;
                 if (normals) n = rows(*normals, "normals");
                 return build_cloud(rows(points, "points"), std::move(n));
             }),
             py::arg("points"), py::arg("normals") = py::none())
        .def_property_readonly("points", [](const ObjectCloud& c) { return matrix(c.points()); })
        .def_property_readonly("normals",
                               [](const ObjectCloud& c) -> std::optional<Eigen::MatrixXd> {
                                   if (!c.has_normals()) return std::nullopt;
                                   return matrix(c.normals());
                               })
        .def_property_readonly("centroid", &ObjectCloud::centroid)
        .def("__len__", &ObjectCloud::size);
    m.def("load_cloud", &load_cloud, py::arg("path"), py::arg("scale") = 1.0);
    m.def(
        "synth_object",
        [](const std::string& kind, std::size_t count, std::uint64_t seed, double radius, const Vec3& size,
           double height) { return synth_object(ShapeSpec{parse_shape_kind(kind), radius, size, height}, count, seed); },
        py::arg("kind"), py::arg("count"), py::arg("seed") = 0, py::arg("radius") = 0.04,
        py::arg("size") = Vec3::Constant(0.08), py::arg("height") = 0.1);

    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("trans", &LossWeights::trans)
        .def_readwrite("joints", &LossWeights::joints)
        .def_readwrite("rotation", &LossWeights::rotation)
        .def_readwrite("chamfer", &LossWeights::chamfer)
        .def_readwrite("spen", &LossWeights::spen)
        .def_readwrite("pen", &LossWeights::pen)
        .def_readwrite("dist", &LossWeights::dist)
        .def_readwrite("alpha_pen", &LossWeights::alpha_pen)
        .def_readwrite("alpha_dist", &LossWeights::alpha_dist)
        .def_readwrite("alpha_spen", &LossWeights::alpha_spen)
        .def_readwrite("contact_threshold", &LossWeights::contact_threshold)
        .def_readwrite("smooth_l1_beta", &LossWeights::smooth_l1_beta)
        .def_readwrite("spen_min_separation", &LossWeights::spen_min_separation)
        .def_readwrite("penetration_scale", &LossWeights::penetration_scale)
        .def_readwrite("chamfer_samples", &LossWeights::chamfer_samples)
        .def_readwrite("chamfer_seed", &LossWeights::chamfer_seed);

    m.def("rotation_loss", &rotation_loss, py::arg("r"), py::arg("r_hat"));
    m.def(
        "loss",
        [](const std::string& kind, const HandModel& model, const HandPose& pose, std::optional<HandPose> reference,
           const ObjectCloud* cloud, std::optional<LossWeights> weights) {
            return evaluate_loss(loss_kind(kind), inputs(model, pose, reference, cloud, weights));
        },
        py::arg("kind"), py::arg("model"), py::arg("pose"), py::arg("reference") = py::none(),
        py::arg("cloud") = nullptr, py::arg("weights") = py::none(),
        "Loss value; kind is one of rotation, param, chamfer, pen, spen, van_dist, tta_dist, ab_tta, grasp");
    m.def(
        "loss_gradient",
        [](const std::string& kind, const HandModel& model, const HandPose& pose, std::optional<HandPose> reference,
           const ObjectCloud* cloud, std::optional<LossWeights> weights) {
            const auto vg = loss_gradient(loss_kind(kind), inputs(model, pose, reference, cloud, weights));
            return py::make_tuple(vg.value, vg.gradient);
        },
        py::arg("kind"), py::arg("model"), py::arg("pose"), py::arg("reference") = py::none(),
        py::arg("cloud") = nullptr, py::arg("weights") = py::none(), "(value, gradient over [r, t, q])");

    py::class_<CostWeights>(m, "CostWeights")
        .def(py::init<>())
        .def_readwrite("trans", &CostWeights::trans)
        .def_readwrite("joints", &CostWeights::joints)
        .def_readwrite("rotation", &CostWeights::rotation);
    py::class_<Assignment>(m, "Assignment")
        .def_readonly("pairs", &Assignment::pairs)
        .def_readonly("unmatched_predictions", &Assignment::unmatched_predictions)
        .def_readonly("unmatched_ground_truths", &Assignment::unmatched_ground_truths)
        .def_readonly("total_cost", &Assignment::total_cost);
    m.def(
        "cost_matrix",
        [](const HandModel& model, const std::vector<HandPose>& preds, const std::vector<HandPose>& gts,
           std::optional<CostWeights> w) { return cost_matrix(model, preds, gts, w ? *w : CostWeights{}); },
        py::arg("model"), py::arg("predictions"), py::arg("ground_truths"), py::arg("weights") = py::none());
    m.def("hungarian", &hungarian, py::arg("cost"));
    m.def("matching_instability", &matching_instability, py::arg("previous"), py::arg("current"));

    py::class_<Q1Params>(m, "Q1Params")
        .def(py::init<>())
        .def_readwrite("contact_threshold", &Q1Params::contact_threshold)
        .def_readwrite("penetration_threshold", &Q1Params::penetration_threshold)
        .def_readwrite("friction", &Q1Params::friction)
        .def_readwrite("cone_edges", &Q1Params::cone_edges)
        .def_readwrite("directions", &Q1Params::directions)
        .def_readwrite("torque_scale", &Q1Params::torque_scale)
        .def_readwrite("surface_samples", &Q1Params::surface_samples)
        .def_readwrite("seed", &Q1Params::seed)
        .def_readwrite("refine", &Q1Params::refine);
    m.def(
        "contact_wrenches",
        [](const Eigen::MatrixXd& points, const Eigen::MatrixXd& normals, const Vec3& center, double torque_scale,
           double friction, int cone_edges) {
            const auto p = rows(points, "points"), n = rows(normals, "normals");
            if (p.size() != n.size()) throw ValidationError("points and normals differ in length");
            std::vector<Contact> contacts;
            for (std::size_t i = 0; i < p.size(); ++i) contacts.push_back({p[i], n[i]});
            return Eigen::MatrixXd(contact_wrenches(contacts, center, torque_scale, friction, cone_edges));
        },
        py::arg("points"), py::arg("normals"), py::arg("center"), py::arg("torque_scale"), py::arg("friction") = 0.5,
        py::arg("cone_edges") = 8, "6 x (contacts * edges) primitive wrenches");
    m.def(
        "q1_from_wrenches",
        [](const Eigen::MatrixXd& w, int directions, std::uint64_t seed, bool refine) {
            if (w.rows() != 6) throw ValidationError("wrenches must have 6 rows");
            return q1_from_wrenches(w, directions, seed, refine);
        },
        py::arg("wrenches"), py::arg("directions") = 1024, py::arg("seed") = 0, py::arg("refine") = true);
    m.def(
        "q1", [](const HandModel& h, const HandPose& p, const ObjectCloud& c, std::optional<Q1Params> q) {
            return q1(h, p, c, q ? *q : Q1Params{});
        },
        py::arg("model"), py::arg("pose"), py::arg("cloud"), py::arg("params") = py::none());
    m.def("pen_depth", &pen_depth, py::arg("model"), py::arg("pose"), py::arg("cloud"), "Max penetration, cm");
    m.def("contact_count", &contact_count, py::arg("model"), py::arg("pose"), py::arg("cloud"),
          py::arg("tau") = 0.01);
    using Poses = std::vector<HandPose>;
    m.def(
        "delta_t", [](const Poses& p, const Vec3& c, int xi) { return delta_t(p, c, xi); }, py::arg("poses"),
        py::arg("center"), py::arg("xi") = 16);
    m.def(
        "delta_r", [](const Poses& p, int xi) { return delta_r(p, xi); }, py::arg("poses"), py::arg("xi") = 16);
    m.def(
        "delta_q", [](const HandModel& h, const Poses& p, int xi) { return delta_q(h, p, xi); }, py::arg("model"),
        py::arg("poses"), py::arg("xi") = 16);
    m.def(
        "pose_similarity", [](const HandModel& h, const Poses& p) { return pose_similarity(h, p); },
        py::arg("model"), py::arg("poses"));
    m.def(
        "evaluate_set",
        [](const HandModel& h, const std::vector<HandPose>& poses, const ObjectCloud& c, std::optional<Q1Params> q,
           int xi) {
            const MetricsReport r = evaluate_set(h, poses, c, q ? *q : Q1Params{}, xi);
            py::dict d;
            d["eta_np"] = r.eta_np;
            d["eta_tb"] = r.eta_tb;
            d["mean_q1"] = r.mean_q1;
            d["mean_pen_depth_cm"] = r.mean_pen_depth_cm;
            d["mean_contacts"] = r.mean_contacts;
            d["delta_t"] = r.delta_t;
            d["delta_r"] = r.delta_r;
            d["delta_q"] = r.delta_q;
            d["similarity"] = r.similarity;
            py::list grasps;
            for (const auto& g : r.grasps) {
                py::dict e;
                e["q1"] = g.q1;
                e["pen_depth_cm"] = g.pen_depth_cm;
                e["contacts"] = g.contacts;
                grasps.append(e);
            }
            d["grasps"] = grasps;
            return d;
        },
        py::arg("model"), py::arg("poses"), py::arg("cloud"), py::arg("params") = py::none(), py::arg("xi") = 16);

    py::class_<TtaConfig>(m, "TtaConfig")
        .def(py::init<>())
        .def_readwrite("steps", &TtaConfig::steps)
        .def_readwrite("step_size", &TtaConfig::step_size)
        .def_readwrite("translation_scale", &TtaConfig::translation_scale)
        .def_readwrite("tolerance", &TtaConfig::tolerance)
        .def_readwrite("divergence_patience", &TtaConfig::divergence_patience)
        .def_readwrite("vanilla", &TtaConfig::vanilla)
        .def_readwrite("weights", &TtaConfig::weights);
    py::class_<TtaResult>(m, "TtaResult")
        .def_readonly("pose", &TtaResult::pose)
        .def_readonly("initial_loss", &TtaResult::initial_loss)
        .def_readonly("final_loss", &TtaResult::final_loss)
        .def_property_readonly("stop", [](const TtaResult& r) { return std::string(stop_name(r.stop)); })
        .def_property_readonly("losses", [](const TtaResult& r) {
            std::vector<double> out;
            for (const auto& s : r.trace) out.push_back(s.loss);
            return out;
        });
    m.def(
        "refine",
        [](const HandModel& h, const HandPose& coarse, const ObjectCloud& c, std::optional<TtaConfig> cfg) {
            return refine(h, coarse, c, cfg ? *cfg : TtaConfig{});
        },
        py::arg("model"), py::arg("coarse"), py::arg("cloud"), py::arg("config") = py::none());

    m.def(
        "ground_truth_grasps",
        [](const HandModel& h, const ObjectCloud& c, std::size_t count, std::uint64_t seed) {
            return ground_truth_grasps(h, c, count, seed, TtaConfig{});
        },
        py::arg("model"), py::arg("cloud"), py::arg("count"), py::arg("seed") = 0,
        "Constructed grasps (pen < 0.5 cm, >= 3 keypoint contacts, Q1 > 0)");
    m.def(
        "perturb_grasp",
        [](const HandModel& h, const HandPose& g, std::uint64_t seed, double closing, double angle) {
            Rng rng(seed);
            return perturb_grasp(h, g, rng, closing, angle);
        },
        py::arg("model"), py::arg("grasp"), py::arg("seed"), py::arg("closing") = 0.1, py::arg("angle") = 0.05);

    m.def(
        "load_grasp_set",
        [](const std::filesystem::path& path) {
            const std::string text = read_text_file(path);
            const HandModel model = load_hand(grasp_set_hand(text));
            return parse_grasp_set(text, model).poses;
        },
        py::arg("path"));
    m.def(
        "save_grasp_set",
        [](const std::filesystem::path& path, const std::string& hand, const std::vector<HandPose>& poses) {
            GraspSetFile set;
            set.hand = hand;
            set.poses = poses;
            write_file_atomic(path, dump_grasp_set(set));
        },
        py::arg("path"), py::arg("hand"), py::arg("poses"));
}
