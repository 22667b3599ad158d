#pragma once

#include <vector>

#include "core/matrix.hpp"

namespace photoscore {

struct EigenSystem {
  std::vector<double> eigenvalues;  // sorted descending
  Matrix eigenvectors;              // column m pairs with eigenvalues[m]
};

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Converges when the off-diagonal Frobenius norm drops below 1e-12; gives up
// after 100 sweeps.  Eigenvector signs are canonicalized so the component of
// largest magnitude is positive.
EigenSystem sym_eig(const Matrix& m);

}  // namespace photoscore
