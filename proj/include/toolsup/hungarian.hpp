#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace toolsup::rewards {

/// Dense rows x cols weight matrix, row-major.
class WeightMatrix {
 public:
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

struct Assignment {
  double total = 0.0;
  /// Column assigned to each row, nullopt when the row stays unmatched.
  std::vector<std::optional<std::size_t>> row_to_col;
};

/// Maximum-total-weight one-to-one assignment (Kuhn-Munkres, O(n^3) per
/// solve). Weights must be finite; rectangular inputs are padded with zero
/// weights, so unmatched rows/columns contribute nothing.
///
/// Among optimal assignments the lexicographically smallest row_to_col
/// vector is returned, ordering "unmatched" after every real column. Ties
/// are decided relative to `tie_tolerance`.
Assignment max_weight_assignment(const WeightMatrix& weights, double tie_tolerance = 1e-12);

}  // namespace toolsup::rewards
