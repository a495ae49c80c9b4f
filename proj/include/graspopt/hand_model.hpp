#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "graspopt/geometry.hpp"

namespace graspopt {

struct Link {
    std::string name;
    int parent = -1;
    Frame rest;
    int joint = -1;  ///< index of the revolute joint driving this link, -1 if fixed
};

struct Joint {
    std::string name;
    int link = 0;
    Vec3 axis = Vec3::UnitZ();  ///< unit vector in the link frame
    double lower = 0.0;
    double upper = 0.0;

    double range() const { return upper - lower; }
    double mid() const { return 0.5 * (lower + upper); }
};

struct Keypoint {
    int link = 0;
    Vec3 offset = Vec3::Zero();
    std::vector<int> exclude;  ///< keypoints never tested for self-penetration against this one
};

struct Capsule {
    int link = 0;
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.0;

    double area() const;
};

struct WorkspaceBox {
    Vec3 lower = Vec3::Constant(-0.3);
    Vec3 upper = Vec3::Constant(0.3);
};

/// Articulated capsule hand. Immutable after construction.
class HandModel {
public:
    HandModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
              std::vector<Keypoint> keypoints, std::vector<Capsule> capsules,
              WorkspaceBox workspace);

    const std::string& name() const { return name_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<Joint>& joints() const { return joints_; }
    const std::vector<Keypoint>& keypoints() const { return keypoints_; }
    const std::vector<Capsule>& capsules() const { return capsules_; }
    const WorkspaceBox& workspace() const { return workspace_; }

    std::size_t dof() const { return joints_.size(); }
    /// Length of a pose parameter vector: 4 quaternion + 3 translation + J joints.
    std::size_t parameter_count() const { return 7 + joints_.size(); }

    /// Links ordered so that every parent precedes its children.
    const std::vector<int>& evaluation_order() const { return order_; }
    /// Joints on the path from the root to `link`, the link's own joint included.
    const std::vector<int>& chain_joints(int link) const { return chain_joints_[link]; }
    /// True if keypoints i and j are checked for self-penetration.
    bool pair_checked(int i, int j) const;

private:
    std::string name_;
    std::vector<Link> links_;
    std::vector<Joint> joints_;
    std::vector<Keypoint> keypoints_;
    std::vector<Capsule> capsules_;
    WorkspaceBox workspace_;
    std::vector<int> order_;
    std::vector<std::vector<int>> chain_joints_;
    std::vector<char> excluded_;  // keypoint pair matrix
};

/// Parses a hand-config JSON document (see docs/hand-config.md).
/// Throws ParseError on schema violations and StructuralError on invalid trees or limits.
HandModel load_hand_config(std::string_view document);
HandModel load_hand_config_file(const std::filesystem::path& path);

}  // namespace graspopt
