#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "graspopt/geometry.hpp"

namespace graspopt {

struct Neighbor {
    std::size_t index = 0;
    double squared_distance = 0.0;
};

/// Exact nearest-neighbour k-d tree over a fixed point set (median splits on the widest axis).
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points);

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    Neighbor nearest(const Vec3& query) const;
    const std::vector<Vec3>& points() const { return points_; }

private:
    struct Node {
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;
    };

    int build(std::size_t begin, std::size_t end);
    void search(int node, const Vec3& q, Neighbor& best) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Object surface points (meters) with optional unit normals and an eager spatial index.
class ObjectCloud {
public:
    ObjectCloud(std::vector<Vec3> points, std::optional<std::vector<Vec3>> normals = std::nullopt);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }
    bool has_normals() const { return normals_.has_value(); }
    const std::vector<Vec3>& normals() const;
    const Vec3& centroid() const { return centroid_; }
    /// Largest distance from the centroid to a point.
    double bounding_radius() const { return bounding_radius_; }

    Neighbor nearest(const Vec3& q) const { return index_.nearest(q); }

private:
    std::vector<Vec3> points_;
    std::optional<std::vector<Vec3>> normals_;
    KdTree index_;
    Vec3 centroid_ = Vec3::Zero();
    double bounding_radius_ = 0.0;
};

/// Same as the constructor; throws ValidationError on empty input or non-finite rows.
ObjectCloud build_cloud(std::vector<Vec3> points, std::optional<std::vector<Vec3>> normals = std::nullopt);

/// Reads ASCII PLY (x y z [nx ny nz]), OBJ (v and optional vn lines), or whitespace XYZ
/// (3 or 6 columns), chosen by extension. Coordinates are multiplied by `scale`.
ObjectCloud load_cloud(const std::filesystem::path& path, double scale = 1.0);

}  // namespace graspopt
