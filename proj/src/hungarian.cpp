#include "toolsup/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toolsup/error.hpp"

namespace toolsup::rewards {

namespace {

// Minimum-cost perfect matching on a square n x n cost matrix using the
// potentials formulation. Returns col_of_row.
std::vector<std::size_t> solve_min_cost(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

struct Solver {
  std::size_t n;
  std::vector<double> weight;   // padded square weights
  std::vector<char> allowed;    // 0 = pair excluded

  double solve(std::vector<std::size_t>* cols) const {
    // Excluded pairs get a penalty larger than any achievable total.
    const double penalty = 4.0 * (1.0 + max_abs()) * static_cast<double>(n + 1);
    std::vector<double> cost(n * n);
    for (std::size_t k = 0; k < n * n; ++k) cost[k] = allowed[k] ? -weight[k] : penalty;
    const auto assignment = solve_min_cost(cost, n);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t k = r * n + assignment[r];
      if (!allowed[k]) return -std::numeric_limits<double>::infinity();
      total += weight[k];
    }
    if (cols) *cols = assignment;
    return total;
  }

  double max_abs() const {
    double m = 0.0;
    for (double w : weight) m = std::max(m, std::abs(w));
    return m;
  }

  void fix(std::size_t r, std::size_t c) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != c) allowed[r * n + j] = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i != r) allowed[i * n + c] = 0;
    }
  }
};

}  // namespace

Assignment max_weight_assignment(const WeightMatrix& weights, double tie_tolerance) {
  const std::size_t rows = weights.rows();
  const std::size_t cols = weights.cols();
  Assignment result;
  result.row_to_col.assign(rows, std::nullopt);
  if (rows == 0 || cols == 0) return result;

  Solver solver;
  solver.n = std::max(rows, cols);
  solver.weight.assign(solver.n * solver.n, 0.0);
  solver.allowed.assign(solver.n * solver.n, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double w = weights(r, c);
      if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArguments, "assignment weights must be finite");
      solver.weight[r * solver.n + c] = w;
    }
  }

  std::vector<std::size_t> assignment;
  const double optimum = solver.solve(&assignment);
  const double slack = tie_tolerance * std::max(1.0, std::abs(optimum));

  // Lexicographic refinement: fix each row to the smallest column that
  // still admits an optimal completion. Padded columns come last and are
  // interchangeable, so "unmatched" is tried as a single option.
  for (std::size_t r = 0; r < rows; ++r) {
    bool fixed = false;
    for (std::size_t c = 0; c < cols && !fixed; ++c) {
      if (!solver.allowed[r * solver.n + c]) continue;
      Solver trial = solver;
      trial.fix(r, c);
      std::vector<std::size_t> trial_cols;
      if (trial.solve(&trial_cols) >= optimum - slack) {
        solver = std::move(trial);
        assignment = std::move(trial_cols);
        fixed = true;
      }
    }
    if (!fixed) {
      // Only padded columns remain optimal for this row; forbid its real ones.
      for (std::size_t c = 0; c < cols; ++c) solver.allowed[r * solver.n + c] = 0;
      std::vector<std::size_t> trial_cols;
      if (solver.solve(&trial_cols) < optimum - slack) {
        throw Error(ErrorCode::Internal, "assignment refinement lost optimality");
      }
      assignment = std::move(trial_cols);
    }
  }

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = assignment[r];
    if (c < cols) {
      result.row_to_col[r] = c;
      result.total += weights(r, c);
    }
  }
  return result;
}

}  // namespace toolsup::rewards
