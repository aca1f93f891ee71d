#pragma once

#include "lowrankseg/linalg.hpp"

#include <cstddef>

// Closed-form proximal maps used as the block updates of the ALM solvers.
// Each one returns argmin_M  tau * f(M) + 1/2 ||M - G||_F^2  for its f.

namespace lowrankseg::prox {

/// Result of a spectral thresholding step. nuclear_norm is the sum of the
/// thresholded spectrum, i.e. the nuclear norm of `value`, obtained for free.
struct Thresholded {
  Mat value;
  double nuclear_norm = 0.0;
  std::size_t rank = 0;
};

/// Singular value thresholding: U diag(max(sigma - tau, 0)) V^T.
Mat svt(const Mat& g, double tau);
Thresholded svt_detailed(const Mat& g, double tau);

/// Nuclear-norm prox restricted to the PSD cone. Symmetrizes g as
/// (g + g^T) / 2 = Q diag(lambda) Q^T and returns Q diag(max(lambda - tau, 0)) Q^T.
/// The result is exactly symmetric and positive semidefinite. Requires square g.
Mat psd_eig_threshold(const Mat& g, double tau);
Thresholded psd_eig_threshold_detailed(const Mat& g, double tau);

/// Entrywise soft threshold, the prox of the l1 norm.
Mat shrink_l1(const Mat& g, double tau);

/// Column-wise shrinkage, the prox of the l2,1 norm. Columns with norm <= tau
/// become zero.
Mat shrink_l21(const Mat& g, double tau);

}  // namespace lowrankseg::prox
