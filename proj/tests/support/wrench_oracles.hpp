#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "graspopt/metrics.hpp"
#include "graspopt/rng.hpp"

namespace graspopt::testing {

/// Minimum support value over `count` random unit directions (no refinement).
inline double dense_direction_q1(const Wrenches& w, int count, std::uint64_t seed) {
    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        Eigen::Matrix<double, 6, 1> u;
        for (int a = 0; a < 6; ++a) u[a] = rng.normal();
        u.normalize();
        best = std::min(best, (u.transpose() * w).maxCoeff());
    }
    return std::max(0.0, best);
}

/// Exact inscribed-ball radius by enumerating every hyperplane through six wrenches and keeping
/// the supporting ones (all wrenches on one side). Exponential; meant for <= 32 wrenches.
inline double facet_enumeration_q1(const Wrenches& w) {
    const int m = static_cast<int>(w.cols());
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    std::vector<int> pick(6);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == 6) {
            Eigen::Matrix<double, 6, 6> b;
            for (int r = 0; r < 6; ++r) b.row(r) = w.col(pick[r]).transpose();
            // plane n . x = d through the six points, with |n| = 1
            Eigen::Matrix<double, 6, 7> aug;
            aug << b, -Eigen::Matrix<double, 6, 1>::Ones();
            Eigen::FullPivLU<Eigen::Matrix<double, 6, 7>> lu(aug);
            if (lu.dimensionOfKernel() != 1) return;
            Eigen::Matrix<double, 7, 1> k = lu.kernel().col(0);
            Eigen::Matrix<double, 6, 1> n = k.head<6>();
            double d = k[6];
            const double len = n.norm();
            if (len < 1e-12) return;
            n /= len;
            d /= len;
            const Eigen::RowVectorXd proj = n.transpose() * w;
            const double tol = 1e-9;
            if (proj.maxCoeff() <= d + tol) {
                any = true;
                best = std::min(best, d);
            } else if (proj.minCoeff() >= d - tol) {
                any = true;
                best = std::min(best, -d);
            }
            return;
        }
        for (int i = start; i <= m - (6 - depth); ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    if (m >= 6) rec(0, 0);
    if (!any) return 0.0;
    return std::max(0.0, best);
}

}  // namespace graspopt::testing
