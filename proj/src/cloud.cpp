#include "graspopt/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "graspopt/errors.hpp"

namespace graspopt {

namespace {
constexpr std::size_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) build(0, points_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int id, const Vec3& q, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const double d = (q - points_[idx]).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && idx < best.index))
                best = {idx, d};
        }
        return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.squared_distance) search(far, q, best);
}

Neighbor KdTree::nearest(const Vec3& query) const {
    if (points_.empty()) throw ValidationError("nearest-neighbour query on an empty index");
    Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(0, query, best);
    return best;
}

ObjectCloud::ObjectCloud(std::vector<Vec3> points, std::optional<std::vector<Vec3>> normals)
    : points_(std::move(points)), normals_(std::move(normals)) {
    if (points_.empty()) throw ValidationError("object cloud is empty");
    for (std::size_t i = 0; i < points_.size(); ++i)
        if (!points_[i].allFinite())
            throw ValidationError("object cloud row " + std::to_string(i) + " has a non-finite coordinate");
    if (normals_) {
        if (normals_->size() != points_.size())
            throw ValidationError("object cloud has " + std::to_string(points_.size()) + " points but " +
                                  std::to_string(normals_->size()) + " normals");
        for (std::size_t i = 0; i < normals_->size(); ++i) {
            const auto& n = (*normals_)[i];
            if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6)
                throw ValidationError("object cloud normal " + std::to_string(i) + " is not unit length");
        }
    }
    for (const auto& p : points_) centroid_ += p;
    centroid_ /= static_cast<double>(points_.size());
    for (const auto& p : points_) bounding_radius_ = std::max(bounding_radius_, (p - centroid_).norm());
    index_ = KdTree(points_);
}

const std::vector<Vec3>& ObjectCloud::normals() const {
    if (!normals_) throw ValidationError("object cloud has no normals");
    return *normals_;
}

ObjectCloud build_cloud(std::vector<Vec3> points, std::optional<std::vector<Vec3>> normals) {
    return ObjectCloud(std::move(points), std::move(normals));
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::optional<std::vector<Vec3>> finish_normals(std::vector<Vec3>& normals, std::size_t n_points) {
    if (normals.empty() || normals.size() != n_points) return std::nullopt;
    for (auto& v : normals) {
        const double norm = v.norm();
        if (norm > 0) v /= norm;
    }
    return normals;
}

ObjectCloud read_ply(std::istream& in, const std::string& name, double scale) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw ValidationError(name + ": missing 'ply' magic");
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    std::vector<std::string> props;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw ValidationError(name + ": only ASCII PLY is supported");
        } else if (word == "element") {
            std::string what;
            ls >> what;
            in_vertex = what == "vertex";
            if (in_vertex) ls >> vertex_count;
        } else if (word == "property" && in_vertex) {
            std::string type, prop;
            ls >> type >> prop;
            props.push_back(prop);
        } else if (word == "end_header") {
            break;
        }
    }
    if (vertex_count == 0) throw ValidationError(name + ": no vertices");
    auto column = [&](const char* key) -> int {
        auto it = std::find(props.begin(), props.end(), key);
        return it == props.end() ? -1 : static_cast<int>(it - props.begin());
    };
    const int cx = column("x"), cy = column("y"), cz = column("z");
    const int nx = column("nx"), ny = column("ny"), nz = column("nz");
    if (cx < 0 || cy < 0 || cz < 0) throw ValidationError(name + ": vertex element lacks x/y/z");
    std::vector<Vec3> points, normals;
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line)) throw ValidationError(name + ": truncated vertex list");
        std::istringstream ls(line);
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.size() < props.size())
            throw ValidationError(name + ": vertex " + std::to_string(i) + " has too few values");
        points.emplace_back(values[cx] * scale, values[cy] * scale, values[cz] * scale);
        if (nx >= 0 && ny >= 0 && nz >= 0) normals.emplace_back(values[nx], values[ny], values[nz]);
    }
    auto n = finish_normals(normals, points.size());
    return ObjectCloud(std::move(points), std::move(n));
}

ObjectCloud read_obj(std::istream& in, const std::string& name, double scale) {
    std::vector<Vec3> points, normals;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        double x, y, z;
        if (tag == "v") {
            if (!(ls >> x >> y >> z)) throw ValidationError(name + ": malformed v line");
            points.emplace_back(x * scale, y * scale, z * scale);
        } else if (tag == "vn") {
            if (!(ls >> x >> y >> z)) throw ValidationError(name + ": malformed vn line");
            normals.emplace_back(x, y, z);
        }
    }
    if (points.empty()) throw ValidationError(name + ": no vertices");
    auto n = finish_normals(normals, points.size());
    return ObjectCloud(std::move(points), std::move(n));
}

ObjectCloud read_xyz(std::istream& in, const std::string& name, double scale) {
    std::vector<Vec3> points, normals;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) continue;
        if (values.size() != 3 && values.size() != 6)
            throw ValidationError(name + ": line " + std::to_string(row) + " needs 3 or 6 columns");
        points.emplace_back(values[0] * scale, values[1] * scale, values[2] * scale);
        if (values.size() == 6) normals.emplace_back(values[3], values[4], values[5]);
    }
    if (points.empty()) throw ValidationError(name + ": no vertices");
    auto n = finish_normals(normals, points.size());
    return ObjectCloud(std::move(points), std::move(n));
}

}  // namespace

ObjectCloud load_cloud(const std::filesystem::path& path, double scale) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open cloud file: " + path.string());
    const std::string ext = lower_ext(path);
    if (ext == ".ply") return read_ply(in, path.string(), scale);
    if (ext == ".obj") return read_obj(in, path.string(), scale);
    return read_xyz(in, path.string(), scale);
}

}  // namespace graspopt
