#include "core/eigen_sym.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace photoscore {

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kOffDiagTarget = 1e-12;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double ss = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) ss += a(i, j) * a(i, j);
  return std::sqrt(ss);
}

}  // namespace

EigenSystem sym_eig(const Matrix& m) {
  const int n = m.rows();
  if (n != m.cols()) fail(Errc::not_symmetric, "matrix is not square");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > kSymmetryTolerance)
        fail(Errc::not_symmetric, "asymmetry above tolerance at (" +
                                      std::to_string(i) + "," +
                                      std::to_string(j) + ")");

  Matrix a = m;
  Matrix v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  bool converged = (n == 1) || off_diagonal_norm(a) < kOffDiagTarget;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;

        // Stable rotation angle: the smaller root of t^2 + 2t*theta - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p);
        const double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_diagonal_norm(a) < kOffDiagTarget;
  }
  if (!converged)
    fail(Errc::no_convergence,
         "Jacobi sweeps exhausted (" + std::to_string(kMaxSweeps) + ")");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a(x, x) > a(y, y); });

  EigenSystem out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (int mcol = 0; mcol < n; ++mcol) {
    const int src = order[mcol];
    out.eigenvalues[mcol] = a(src, src);
    int peak = 0;
    for (int i = 1; i < n; ++i)
      if (std::fabs(v(i, src)) > std::fabs(v(peak, src))) peak = i;
    const double flip = v(peak, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.eigenvectors(i, mcol) = flip * v(i, src);
  }
  return out;
}

}  // namespace photoscore
