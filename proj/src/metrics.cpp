#include "graspopt/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

#include <Eigen/Dense>

#include "graspopt/distance.hpp"
#include "graspopt/errors.hpp"
#include "graspopt/rng.hpp"

namespace graspopt {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Dense two-phase simplex (Bland's rule) for  min 1'mu  s.t.  W mu = g, mu >= 0.
// On success returns the six basic columns of the optimum.
std::optional<std::array<int, 6>> shoot_ray(const Wrenches& w, const Vec6& g) {
    const int m = static_cast<int>(w.cols());
    const int cols = m + 6;
    const double eps = 1e-10;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(6, cols + 1);
    for (int r = 0; r < 6; ++r) {
        const double s = g[r] < 0 ? -1.0 : 1.0;
        t.row(r).head(m) = s * w.row(r);
        t(r, m + r) = 1.0;
        t(r, cols) = s * g[r];
    }
    std::array<int, 6> basis;
    for (int r = 0; r < 6; ++r) basis[r] = m + r;

    auto pivot = [&](int row, int col) {
        t.row(row) /= t(row, col);
        for (int r = 0; r < 6; ++r)
            if (r != row && t(r, col) != 0.0) t.row(r) -= t(r, col) * t.row(row);
        basis[row] = col;
    };

    // phase 1 costs: artificials 1; phase 2: real columns 1, artificials barred
    auto run = [&](bool phase_one) {
        for (int iter = 0; iter < 50000; ++iter) {
            int enter = -1;
            const int limit = phase_one ? cols : m;
            for (int j = 0; j < limit && enter < 0; ++j) {
                double reduced = phase_one ? (j >= m ? 1.0 : 0.0) : 1.0;
                for (int r = 0; r < 6; ++r) {
                    const double cb = phase_one ? (basis[r] >= m ? 1.0 : 0.0) : (basis[r] < m ? 1.0 : 0.0);
                    reduced -= cb * t(r, j);
                }
                if (reduced < -eps) enter = j;
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < 6; ++r) {
                if (t(r, enter) <= eps) continue;
                const double ratio = t(r, cols) / t(r, enter);
                if (ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave >= 0 && basis[r] < basis[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return false;  // unbounded; cannot happen for a nonnegative objective
            pivot(leave, enter);
        }
        return false;
    };

    if (!run(true)) return std::nullopt;
    double infeasibility = 0.0;
    for (int r = 0; r < 6; ++r)
        if (basis[r] >= m) infeasibility += t(r, cols);
    if (infeasibility > 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff())) return std::nullopt;
    for (int r = 0; r < 6; ++r) {
        if (basis[r] < m) continue;
        int col = -1;
        for (int j = 0; j < m && col < 0; ++j)
            if (std::abs(t(r, j)) > 1e-9) col = j;
        if (col < 0) return std::nullopt;  // the wrenches span fewer than six dimensions
        pivot(r, col);
    }
    if (!run(false)) return std::nullopt;
    return basis;
}

double support(const Wrenches& w, const Vec6& u) { return (u.transpose() * w).maxCoeff(); }

}  // namespace

void Q1Params::validate() const {
    if (!(contact_threshold > 0 && penetration_threshold > 0)) throw ValidationError("Q1 thresholds must be > 0");
    if (!(friction >= 0)) throw ValidationError("friction coefficient must be >= 0");
    if (cone_edges < 3) throw ValidationError("friction cone needs at least 3 edges");
    if (directions < 1) throw ValidationError("Q1 needs at least one direction sample");
    if (!(torque_scale >= 0)) throw ValidationError("torque scale must be >= 0");
    if (surface_samples < 1) throw ValidationError("Q1 needs at least one hand surface sample");
}

std::vector<Contact> find_contacts(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud,
                                   const Q1Params& params) {
    if (!cloud.has_normals()) throw ValidationError("contact detection needs object normals");
    const SurfaceSamples samples = sample_surface(model, params.surface_samples, params.seed);
    const PosedHand hand(model, pose);
    std::vector<char> touched(cloud.size(), 0);
    const double limit = params.contact_threshold * params.contact_threshold;
    for (const auto& s : samples.points) {
        const Neighbor nb = cloud.nearest(hand.to_world(s));
        if (nb.squared_distance < limit) touched[nb.index] = 1;
    }
    std::vector<Contact> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (touched[i]) out.push_back({cloud.points()[i], cloud.normals()[i]});
    return out;
}

Wrenches contact_wrenches(std::span<const Contact> contacts, const Vec3& center, double torque_scale,
                          double friction, int cone_edges) {
    Wrenches w(6, static_cast<Eigen::Index>(contacts.size()) * cone_edges);
    Vec3 mean = Vec3::Zero();
    for (const auto& c : contacts) mean += c.point;
    if (!contacts.empty()) mean /= static_cast<double>(contacts.size());
    Eigen::Index col = 0;
    for (const auto& c : contacts) {
        const Vec3 n = -c.normal.normalized();
        Vec3 t1 = (mean - c.point) - (mean - c.point).dot(n) * n;
        if (t1.norm() < 1e-9) t1 = (c.point - center) - (c.point - center).dot(n) * n;
        if (t1.norm() < 1e-9) t1 = std::abs(n.x()) < 0.9 ? Vec3(Vec3::UnitX() - n.x() * n) : Vec3(Vec3::UnitY() - n.y() * n);
        t1.normalize();
        const Vec3 t2 = n.cross(t1);
        for (int k = 0; k < cone_edges; ++k) {
            const double a = 2.0 * std::numbers::pi * k / cone_edges;
            const Vec3 f = n + friction * (std::cos(a) * t1 + std::sin(a) * t2);
            w.block<3, 1>(0, col) = f;
            w.block<3, 1>(3, col) = torque_scale * (c.point - center).cross(f);
            ++col;
        }
    }
    return w;
}

double q1_from_wrenches(const Wrenches& w, int directions, std::uint64_t seed, bool refine) {
    if (w.cols() == 0) return 0.0;
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::pair<double, Vec6>> sampled;
    sampled.reserve(static_cast<std::size_t>(directions));
    for (int k = 0; k < directions; ++k) {
        Vec6 u;
        for (int a = 0; a < 6; ++a) u[a] = rng.normal();
        u.normalize();
        sampled.emplace_back(support(w, u), u);
    }
    std::stable_sort(sampled.begin(), sampled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double best = sampled.front().first;
    if (best <= 0.0) return 0.0;
    if (!refine) return best;

    // Each walk can stall on a facet whose foot point lies inside it without being the nearest;
    // on symmetric contact layouts 32 starts still missed the nearest facet, 64 and 128 did not.
    const int starts = std::min<int>(128, directions);
    for (int s = 0; s < starts; ++s) {
        Vec6 g = sampled[static_cast<std::size_t>(s)].second;
        double previous = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            const auto basis = shoot_ray(w, g);
            if (!basis) return 0.0;  // the wrench cone does not cover every direction
            Eigen::Matrix<double, 6, 6> b;
            for (int r = 0; r < 6; ++r) b.col(r) = w.col((*basis)[r]);
            const Vec6 v = b.transpose().fullPivLu().solve(Vec6::Ones());
            const double norm = v.norm();
            if (!std::isfinite(norm) || norm <= 0.0) break;
            best = std::min(best, 1.0 / norm);
            if (norm <= previous * (1.0 + 1e-12)) break;
            previous = norm;
            g = v / norm;
        }
    }
    return best;
}

double pen_depth(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud) {
    validate_pose(model, pose);
    const PosedHand hand(model, pose);
    const PlacedCapsules caps(hand);
    double depth = 0.0;
    for (const auto& o : cloud.points()) {
        if (caps.clearly_outside(o)) continue;
        depth = std::max(depth, -caps.query(o).value);
    }
    return depth * 100.0;
}

double q1(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud, const Q1Params& params) {
    params.validate();
    if (!cloud.has_normals()) throw ValidationError("Q1 needs an object cloud with normals");
    if (pen_depth(model, pose, cloud) / 100.0 > params.penetration_threshold) return 0.0;
    const auto contacts = find_contacts(model, pose, cloud, params);
    if (contacts.size() < 3) return 0.0;
    const double scale = params.torque_scale > 0 ? params.torque_scale : 1.0 / cloud.bounding_radius();
    const Wrenches w = contact_wrenches(contacts, cloud.centroid(), scale, params.friction, params.cone_edges);
    return q1_from_wrenches(w, params.directions, params.seed, params.refine);
}

int contact_count(const HandModel& model, const HandPose& pose, const ObjectCloud& cloud, double tau) {
    validate_pose(model, pose);
    const PosedHand hand(model, pose);
    int count = 0;
    for (const auto& p : hand.keypoints()) count += cloud.nearest(p).squared_distance < tau * tau;
    return count;
}

SetRatios set_ratios(std::span<const GraspMetrics> grasps, double penetration_threshold_cm) {
    SetRatios out;
    if (grasps.empty()) return out;
    int np = 0, tb = 0;
    for (const auto& g : grasps) {
        np += g.pen_depth_cm < penetration_threshold_cm;
        tb += g.q1 > 0.0;
    }
    out.eta_np = 100.0 * np / static_cast<double>(grasps.size());
    out.eta_tb = 100.0 * tb / static_cast<double>(grasps.size());
    return out;
}

std::vector<Vec3> fibonacci_sphere(int count) {
    std::vector<Vec3> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
    return out;
}

namespace {

int bin_of(double value, double lo, double hi, int xi) {
    const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * xi));
    return std::clamp(b, 0, xi - 1);
}

double occupancy(std::size_t distinct, int xi) { return std::min(100.0, 100.0 * static_cast<double>(distinct) / xi); }

void check_xi(int xi) {
    if (xi < 1) throw ValidationError("bin count xi must be >= 1");
}

}  // namespace

double delta_t(std::span<const HandPose> poses, const Vec3& center, int xi) {
    check_xi(xi);
    const auto bins = fibonacci_sphere(xi);
    std::set<int> used;
    for (const auto& p : poses) {
        const Vec3 d = p.translation - center;
        int best = 0;
        if (d.norm() > 0.0) {
            double best_cos = -2.0;
            for (int b = 0; b < xi; ++b) {
                const double c = bins[b].dot(d) / d.norm();
                if (c > best_cos) {
                    best_cos = c;
                    best = b;
                }
            }
        }
        used.insert(best);
    }
    return occupancy(used.size(), xi);
}

double delta_r(std::span<const HandPose> poses, int xi) {
    check_xi(xi);
    const double pi = std::numbers::pi;
    std::set<std::array<int, 3>> used;
    for (const auto& p : poses) {
        const Vec3 e = euler_xyz(quaternion_matrix(p.rotation.normalized()));
        used.insert({bin_of(e[0], -pi, pi, xi), bin_of(e[1], -pi / 2, pi / 2, xi), bin_of(e[2], -pi, pi, xi)});
    }
    return occupancy(used.size(), xi);
}

double delta_q(const HandModel& model, std::span<const HandPose> poses, int xi) {
    check_xi(xi);
    std::set<std::vector<int>> used;
    for (const auto& p : poses) {
        std::vector<int> key(model.dof());
        for (std::size_t j = 0; j < model.dof(); ++j)
            key[j] = bin_of(p.joints[static_cast<Eigen::Index>(j)], model.joints()[j].lower, model.joints()[j].upper, xi);
        used.insert(std::move(key));
    }
    return occupancy(used.size(), xi);
}

VecX similarity_vector(const HandModel& model, const HandPose& pose, const Vec4& reference) {
    const auto j = static_cast<Eigen::Index>(model.dof());
    VecX v(7 + j);
    v.segment<4>(0) = pose.rotation.dot(reference) < 0 ? Vec4(-pose.rotation) : pose.rotation;
    const Vec3 lo = model.workspace().lower, span = model.workspace().upper - lo;
    v.segment<3>(4) = (pose.translation - lo).cwiseQuotient(span) - Vec3::Constant(0.5);
    for (Eigen::Index k = 0; k < j; ++k) {
        const Joint& jt = model.joints()[static_cast<std::size_t>(k)];
        v[7 + k] = (pose.joints[k] - jt.lower) / jt.range() - 0.5;
    }
    return v;
}

double pose_similarity(const HandModel& model, std::span<const HandPose> poses) {
    if (poses.empty()) throw ValidationError("pose_similarity needs at least one pose");
    if (poses.size() == 1) return 1.0;
    std::vector<VecX> v;
    for (const auto& p : poses) v.push_back(similarity_vector(model, p, poses.front().rotation));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t b = a + 1; b < v.size(); ++b, ++pairs) sum += v[a].dot(v[b]) / (v[a].norm() * v[b].norm());
    return sum / static_cast<double>(pairs);
}

std::vector<int> select_top_k(const HandModel& model, std::span<const HandPose> poses, const ObjectCloud& cloud,
                              int k, double tau) {
    if (k < 0) throw ValidationError("select_top_k: k must be >= 0");
    struct Rank {
        int contacts;
        double pen;
        int index;
    };
    std::vector<Rank> ranks;
    for (std::size_t i = 0; i < poses.size(); ++i)
        ranks.push_back({contact_count(model, poses[i], cloud, tau), pen_depth(model, poses[i], cloud), static_cast<int>(i)});
    std::sort(ranks.begin(), ranks.end(), [](const Rank& a, const Rank& b) {
        if (a.contacts != b.contacts) return a.contacts > b.contacts;
        if (a.pen != b.pen) return a.pen < b.pen;
        return a.index < b.index;
    });
    std::vector<int> out;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(ranks.size())); ++i) out.push_back(ranks[i].index);
    return out;
}

MetricsReport evaluate_set(const HandModel& model, std::span<const HandPose> poses, const ObjectCloud& cloud,
                           const Q1Params& params, int xi) {
    params.validate();
    if (poses.empty()) throw ValidationError("evaluate_set needs at least one grasp");
    MetricsReport r;
    for (const auto& p : poses) {
        GraspMetrics g;
        g.pen_depth_cm = pen_depth(model, p, cloud);
        g.q1 = q1(model, p, cloud, params);
        g.contacts = contact_count(model, p, cloud, params.contact_threshold);
        r.grasps.push_back(g);
        r.mean_q1 += g.q1;
        r.mean_pen_depth_cm += g.pen_depth_cm;
        r.mean_contacts += g.contacts;
    }
    const double n = static_cast<double>(poses.size());
    r.mean_q1 /= n;
    r.mean_pen_depth_cm /= n;
    r.mean_contacts /= n;
    const SetRatios ratios = set_ratios(r.grasps, params.penetration_threshold * 100.0);
    r.eta_np = ratios.eta_np;
    r.eta_tb = ratios.eta_tb;
    r.delta_t = delta_t(poses, cloud.centroid(), xi);
    r.delta_r = delta_r(poses, xi);
    r.delta_q = delta_q(model, poses, xi);
    r.similarity = pose_similarity(model, poses);
    return r;
}

}  // namespace graspopt
