#include "graspopt/hand_model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graspopt/errors.hpp"

namespace graspopt {

using nlohmann::json;

double Capsule::area() const {
    const double length = (b - a).norm();
    return 2.0 * std::numbers::pi * radius * length + 4.0 * std::numbers::pi * radius * radius;
}

HandModel::HandModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
                     std::vector<Keypoint> keypoints, std::vector<Capsule> capsules,
                     WorkspaceBox workspace)
    : name_(std::move(name)),
      links_(std::move(links)),
      joints_(std::move(joints)),
      keypoints_(std::move(keypoints)),
      capsules_(std::move(capsules)),
      workspace_(workspace) {
    const int n = static_cast<int>(links_.size());
    if (n == 0) throw StructuralError("links: hand needs at least one link");
    if (links_[0].parent != -1) throw StructuralError("links[0].parent: link 0 must be the root");
    for (int i = 1; i < n; ++i) {
        const int p = links_[i].parent;
        if (p < 0 || p >= n || p == i)
            throw StructuralError("links[" + std::to_string(i) + "].parent: link is not attached to the tree");
    }

    // Kahn ordering; anything left over sits on a cycle.
    std::vector<std::vector<int>> children(n);
    for (int i = 1; i < n; ++i) children[links_[i].parent].push_back(i);
    order_.push_back(0);
    for (std::size_t k = 0; k < order_.size(); ++k)
        for (int c : children[order_[k]]) order_.push_back(c);
    if (static_cast<int>(order_.size()) != n)
        throw StructuralError("links: parent indices contain a cycle");

    for (auto& link : links_) link.joint = -1;
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        auto& joint = joints_[j];
        const std::string where = "joints[" + std::to_string(j) + "]";
        if (joint.link < 0 || joint.link >= n) throw StructuralError(where + ".link: out of range");
        if (links_[joint.link].joint != -1)
            throw StructuralError(where + ".link: link already driven by another joint");
        if (!(joint.lower < joint.upper)) throw StructuralError(where + ": limit lower must be < upper");
        const double norm = joint.axis.norm();
        if (!(norm > 1e-12)) throw StructuralError(where + ".axis: zero vector");
        joint.axis /= norm;
        links_[joint.link].joint = static_cast<int>(j);
    }

    chain_joints_.assign(n, {});
    for (int link : order_) {
        if (links_[link].parent >= 0) chain_joints_[link] = chain_joints_[links_[link].parent];
        if (links_[link].joint >= 0) chain_joints_[link].push_back(links_[link].joint);
    }

    for (std::size_t c = 0; c < capsules_.size(); ++c) {
        if (capsules_[c].link < 0 || capsules_[c].link >= n)
            throw StructuralError("capsules[" + std::to_string(c) + "].link: out of range");
        if (!(capsules_[c].radius > 0))
            throw StructuralError("capsules[" + std::to_string(c) + "].radius: must be > 0");
    }

    const std::size_t k = keypoints_.size();
    excluded_.assign(k * k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (keypoints_[i].link < 0 || keypoints_[i].link >= n)
            throw StructuralError("keypoints[" + std::to_string(i) + "].link: out of range");
        excluded_[i * k + i] = 1;
        for (int j : keypoints_[i].exclude) {
            if (j < 0 || static_cast<std::size_t>(j) >= k)
                throw StructuralError("keypoints[" + std::to_string(i) + "].exclude: index out of range");
            excluded_[i * k + j] = 1;
            excluded_[j * k + i] = 1;
        }
    }

    for (int a = 0; a < 3; ++a)
        if (!(workspace_.lower[a] < workspace_.upper[a]))
            throw StructuralError("workspace_box: lower must be < upper on every axis");
}

bool HandModel::pair_checked(int i, int j) const {
    return excluded_[static_cast<std::size_t>(i) * keypoints_.size() + j] == 0;
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + "." + key + ": missing field");
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(where + ": not finite");
    return d;
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ParseError(where + ": expected integer");
    return v.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != N)
        throw ParseError(where + ": expected array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_array()) throw ParseError(where + "." + key + ": expected array");
    return v;
}

}  // namespace

HandModel load_hand_config(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("hand config: invalid JSON: ") + e.what());
    }
    const std::string root = "hand_config";

    std::string name = "hand";
    if (doc.is_object() && doc.contains("name")) {
        if (!doc["name"].is_string()) throw ParseError(root + ".name: expected string");
        name = doc["name"].get<std::string>();
    }

    std::vector<Link> links;
    const json& jlinks = array_field(doc, "links", root);
    for (std::size_t i = 0; i < jlinks.size(); ++i) {
        const std::string where = "links[" + std::to_string(i) + "]";
        Link link;
        const json& jl = jlinks[i];
        const json& jname = field(jl, "name", where);
        if (!jname.is_string()) throw ParseError(where + ".name: expected string");
        link.name = jname.get<std::string>();
        link.parent = integer(field(jl, "parent", where), where + ".parent");
        if (jl.contains("rest")) {
            const json& rest = jl["rest"];
            link.rest.translation = vec<3>(field(rest, "translation", where + ".rest"), where + ".rest.translation");
            if (rest.contains("rotation")) {
                Vec4 q = vec<4>(rest["rotation"], where + ".rest.rotation");
                if (std::abs(q.norm() - 1.0) > 1e-6)
                    throw ParseError(where + ".rest.rotation: quaternion is not unit length");
                link.rest.rotation = quaternion_matrix(q.normalized());
            }
        }
        links.push_back(std::move(link));
    }

    std::vector<Joint> joints;
    const json& jjoints = array_field(doc, "joints", root);
    for (std::size_t i = 0; i < jjoints.size(); ++i) {
        const std::string where = "joints[" + std::to_string(i) + "]";
        const json& jj = jjoints[i];
        Joint joint;
        if (jj.contains("name") && jj["name"].is_string()) joint.name = jj["name"].get<std::string>();
        joint.link = integer(field(jj, "link", where), where + ".link");
        joint.axis = vec<3>(field(jj, "axis", where), where + ".axis");
        joint.lower = number(field(jj, "lower", where), where + ".lower");
        joint.upper = number(field(jj, "upper", where), where + ".upper");
        if (jj.contains("unit")) {
            if (jj["unit"] == "degrees") {
                joint.lower *= std::numbers::pi / 180.0;
                joint.upper *= std::numbers::pi / 180.0;
            } else if (jj["unit"] != "radians") {
                throw ParseError(where + ".unit: expected \"radians\" or \"degrees\"");
            }
        }
        joints.push_back(std::move(joint));
    }

    std::vector<Keypoint> keypoints;
    const json& jkps = array_field(doc, "keypoints", root);
    for (std::size_t i = 0; i < jkps.size(); ++i) {
        const std::string where = "keypoints[" + std::to_string(i) + "]";
        const json& jk = jkps[i];
        Keypoint kp;
        kp.link = integer(field(jk, "link", where), where + ".link");
        kp.offset = vec<3>(field(jk, "offset", where), where + ".offset");
        if (jk.contains("exclude")) {
            const json& ex = jk["exclude"];
            if (!ex.is_array()) throw ParseError(where + ".exclude: expected array");
            for (std::size_t e = 0; e < ex.size(); ++e)
                kp.exclude.push_back(integer(ex[e], where + ".exclude[" + std::to_string(e) + "]"));
        }
        keypoints.push_back(std::move(kp));
    }

    std::vector<Capsule> capsules;
    const json& jcaps = array_field(doc, "capsules", root);
    for (std::size_t i = 0; i < jcaps.size(); ++i) {
        const std::string where = "capsules[" + std::to_string(i) + "]";
        const json& jc = jcaps[i];
        Capsule cap;
        cap.link = integer(field(jc, "link", where), where + ".link");
        cap.a = vec<3>(field(jc, "a", where), where + ".a");
        cap.b = vec<3>(field(jc, "b", where), where + ".b");
        cap.radius = number(field(jc, "radius", where), where + ".radius");
        capsules.push_back(cap);
    }

    WorkspaceBox box;
    const json& jbox = field(doc, "workspace_box", root);
    box.lower = vec<3>(field(jbox, "lower", root + ".workspace_box"), root + ".workspace_box.lower");
    box.upper = vec<3>(field(jbox, "upper", root + ".workspace_box"), root + ".workspace_box.upper");

    const int dof = integer(field(doc, "dof", root), root + ".dof");
    if (dof != static_cast<int>(joints.size()))
        throw StructuralError(root + ".dof: declares " + std::to_string(dof) + " but " +
                              std::to_string(joints.size()) + " revolute joints are listed");

    return HandModel(std::move(name), std::move(links), std::move(joints), std::move(keypoints),
                     std::move(capsules), box);
}

HandModel load_hand_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open hand config: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_hand_config(buffer.str());
}

}  // namespace graspopt
