#include "graspopt/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graspopt/errors.hpp"
#include "graspopt/losses.hpp"

namespace graspopt {

namespace {

thread_local long g_hungarian_calls = 0;

// Minimum-cost perfect matching on a square matrix (shortest augmenting paths with
// potentials). Returns the column assigned to each row.
std::vector<int> solve_square(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double assignment_cost(const Eigen::MatrixXd& a, const std::vector<int>& cols) {
    double sum = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) sum += a(static_cast<Eigen::Index>(i), cols[i]);
    return sum;
}

// Optimal cost of the square problem restricted to the given rows and columns.
double restricted_optimum(const Eigen::MatrixXd& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    if (rows.empty()) return 0.0;
    Eigen::MatrixXd sub(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(rows[r], cols[c]);
    return assignment_cost(sub, solve_square(sub));
}

}  // namespace

void CostWeights::validate() const {
    if (!(trans >= 0.0 && joints >= 0.0 && rotation >= 0.0))
        throw ValidationError("matching cost weights must be non-negative");
}

CostMatrix cost_matrix(const HandModel& model, std::span<const HandPose> predictions,
                       std::span<const HandPose> ground_truths, const CostWeights& weights, double smooth_l1_beta) {
    weights.validate();
    if (predictions.empty() || ground_truths.empty()) throw ValidationError("cost_matrix needs non-empty grasp sets");
    CostMatrix c(predictions.size(), ground_truths.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        validate_pose(model, predictions[i]);
        for (std::size_t j = 0; j < ground_truths.size(); ++j) {
            if (i == 0) validate_pose(model, ground_truths[j]);
            const HandPose& g = predictions[i];
            const HandPose& h = ground_truths[j];
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                weights.trans * translation_loss(model, g, h, smooth_l1_beta) +
                weights.joints * joint_loss(model, g, h, smooth_l1_beta) +
                weights.rotation * rotation_loss(g.rotation, h.rotation);
        }
    }
    return c;
}

Assignment hungarian(const CostMatrix& cost) {
    ++g_hungarian_calls;
    if (!cost.allFinite()) throw ValidationError("hungarian: cost matrix has non-finite entries");
    const int rows = static_cast<int>(cost.rows()), cols = static_cast<int>(cost.cols());
    Assignment out;
    out.prediction_count = rows;
    out.ground_truth_count = cols;
    if (rows == 0 || cols == 0) {
        for (int i = 0; i < rows; ++i) out.unmatched_predictions.push_back(i);
        for (int j = 0; j < cols; ++j) out.unmatched_ground_truths.push_back(j);
        return out;
    }

    const int n = std::max(rows, cols);
    const double sentinel = cost.cwiseAbs().maxCoeff() + 1.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, sentinel);
    a.topLeftCorner(rows, cols) = cost;

    const double optimum = assignment_cost(a, solve_square(a));
    const double tolerance = 1e-12 * (1.0 + a.cwiseAbs().sum());

    // Fix rows in order, each to the smallest column that still admits an optimal completion.
    std::vector<int> chosen(n, -1);
    std::vector<int> free_rows, free_cols(n);
    for (int j = 0; j < n; ++j) free_cols[j] = j;
    double fixed_cost = 0.0;
    for (int i = 0; i < n; ++i) {
        free_rows.assign({});
        for (int r = i + 1; r < n; ++r) free_rows.push_back(r);
        for (std::size_t k = 0; k < free_cols.size(); ++k) {
            const int j = free_cols[k];
            std::vector<int> rest = free_cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
            const double total = fixed_cost + a(i, j) + restricted_optimum(a, free_rows, rest);
            if (total <= optimum + tolerance || k + 1 == free_cols.size()) {
                chosen[i] = j;
                fixed_cost += a(i, j);
                free_cols = std::move(rest);
                break;
            }
        }
    }

    std::vector<char> gt_used(cols, 0);
    for (int i = 0; i < rows; ++i) {
        const int j = chosen[i];
        if (j < cols) {
            out.pairs.emplace_back(i, j);
            out.total_cost += cost(i, j);
            gt_used[j] = 1;
        } else {
            out.unmatched_predictions.push_back(i);
        }
    }
    for (int j = 0; j < cols; ++j)
        if (!gt_used[j]) out.unmatched_ground_truths.push_back(j);
    return out;
}

long hungarian_call_count() { return g_hungarian_calls; }

std::optional<int> Assignment::prediction_for(int gt) const {
    for (const auto& [p, g] : pairs)
        if (g == gt) return p;
    return std::nullopt;
}

std::optional<int> Assignment::ground_truth_for(int pred) const {
    for (const auto& [p, g] : pairs)
        if (p == pred) return g;
    return std::nullopt;
}

double matching_instability(const Assignment& previous, const Assignment& current) {
    if (previous.ground_truth_count != current.ground_truth_count)
        throw ValidationError("matching_instability: assignments cover different ground-truth sets");
    const int m = current.ground_truth_count;
    if (m == 0) return 0.0;
    int changed = 0;
    for (int j = 0; j < m; ++j)
        if (previous.prediction_for(j) != current.prediction_for(j)) ++changed;
    return static_cast<double>(changed) / m;
}

}  // namespace graspopt
