#include "core/matrix.hpp"

#include <cmath>
#include <string>

namespace photoscore {

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c)
      fail(Errc::dimension_mismatch, "ragged initializer rows");
    int j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    fail(Errc::dimension_mismatch,
         "inner dimensions disagree: " + std::to_string(a.cols()) + " vs " +
             std::to_string(b.rows()));
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(Errc::dimension_mismatch, "shape mismatch in max_abs_diff");
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      m = std::max(m, std::fabs(a(i, j) - b(i, j)));
  return m;
}

Matrix zscore_columns(const Matrix& w) {
  const int n = w.rows();
  const int cols = w.cols();
  if (n < 2) fail(Errc::too_few_rows, "need at least 2 rows to standardize");

  Matrix out(n, cols);
  for (int j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += w(i, j);
    mean /= n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = w(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1));
    if (sd == 0.0)
      fail(Errc::constant_column,
           "column " + std::to_string(j) + " has zero variance");
    for (int i = 0; i < n; ++i) out(i, j) = (w(i, j) - mean) / sd;
  }
  return out;
}

Matrix correlation_matrix(const Matrix& w1) {
  const int n = w1.rows();
  const int cols = w1.cols();
  if (n < 2)
    fail(Errc::dimension_mismatch, "need at least 2 rows for a correlation");

  // Each entry is computed once and mirrored, so R is exactly symmetric.
  Matrix r(cols, cols);
  for (int j1 = 0; j1 < cols; ++j1) {
    for (int j2 = j1; j2 < cols; ++j2) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += w1(i, j1) * w1(i, j2);
      const double v = dot / (n - 1);
      r(j1, j2) = v;
      r(j2, j1) = v;
    }
  }
  return r;
}

}  // namespace photoscore
