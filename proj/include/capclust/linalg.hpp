#pragma once

#include <Eigen/Dense>
#include <utility>

#include "capclust/errors.hpp"

namespace capclust {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// H^{-1/2} via the spectral decomposition; throws SingularPooled when H is
// not positive definite (relative tolerance 1e-10 * trace/p).
MatrixXd sym_inv_sqrt(const MatrixXd& H);

struct GenEigenResult {
  VectorXd gamma;   // H-normalized: gamma' H gamma = 1
  double lambda;
};

// Smallest eigenpair of the pencil (A, H): solve H^{-1/2} A H^{-1/2} v =
// lambda v and map back gamma = H^{-1/2} v. Sign fixed so the
// largest-magnitude entry of gamma is positive.
GenEigenResult smallest_generalized_eigen(const MatrixXd& A, const MatrixXd& H);

// Orthonormal basis of the orthogonal complement of span(columns), p x (p-r).
// Throws NoComplementLeft when r >= p and DegenerateProjections when the
// columns are numerically rank-deficient.
MatrixXd orthonormal_complement(const MatrixXd& columns);

// log det of a symmetric positive definite matrix via Cholesky; throws
// DfDSingular when the factorization fails.
double logdet_spd(const MatrixXd& M);

}  // namespace capclust
