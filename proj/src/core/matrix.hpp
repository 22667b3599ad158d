#pragma once

#include <initializer_list>
#include <vector>

#include "core/error.hpp"

namespace photoscore {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1)
      fail(Errc::dimension_mismatch, "matrix dimensions must be positive");
    v_.assign(static_cast<size_t>(rows) * cols, fill);
  }

  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(int r, int c) {
    return v_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return v_[static_cast<size_t>(r) * cols_ + c];
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  Matrix transposed() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Standardizes every column to sample mean 0 and sample standard deviation 1
// (denominator rows - 1).
Matrix zscore_columns(const Matrix& w);

// R = W1' * W1 / (rows - 1) for a column-standardized W1; the Pearson
// correlation matrix of the columns.
Matrix correlation_matrix(const Matrix& w1);

}  // namespace photoscore
