#include "capclust/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>

namespace capclust {

MatrixXd sym_inv_sqrt(const MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  const VectorXd& ev = es.eigenvalues();
  const double tol = 1e-10 * H.trace() / static_cast<double>(H.rows());
  if (!(ev.minCoeff() > tol))
    throw SingularPooled("constraint matrix not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

GenEigenResult smallest_generalized_eigen(const MatrixXd& A,
                                          const MatrixXd& H) {
  const MatrixXd Hinvhalf = sym_inv_sqrt(H);
  MatrixXd B = Hinvhalf * A * Hinvhalf;
  B = 0.5 * (B + B.transpose());  // symmetrize roundoff
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(B);

  GenEigenResult r;
  r.lambda = es.eigenvalues()(0);
  r.gamma = Hinvhalf * es.eigenvectors().col(0);
  r.gamma /= std::sqrt(r.gamma.dot(H * r.gamma));

  long imax = 0;
  r.gamma.cwiseAbs().maxCoeff(&imax);
  if (r.gamma(imax) < 0) r.gamma = -r.gamma;
  return r;
}

MatrixXd orthonormal_complement(const MatrixXd& columns) {
  const long p = columns.rows();
  const long r = columns.cols();
  if (r >= p) throw NoComplementLeft();

  Eigen::ColPivHouseholderQR<MatrixXd> qr(columns);
  if (qr.rank() < r) throw DegenerateProjections();

  // Full Q of [columns]; the trailing p-r columns span the complement.
  Eigen::HouseholderQR<MatrixXd> hqr(columns);
  MatrixXd Qfull = hqr.householderQ();
  return Qfull.rightCols(p - r);
}

double logdet_spd(const MatrixXd& M) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw DfDSingular("matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace capclust
