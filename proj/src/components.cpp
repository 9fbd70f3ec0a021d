#include "capclust/components.hpp"

#include <cmath>

#include "capclust/linalg.hpp"

namespace capclust {

DeflateResult deflate(const Dataset& d, const std::vector<VectorXd>& Gamma) {
  d.require_raw("deflate");
  const long r = static_cast<long>(Gamma.size());
  MatrixXd G(d.p, r);
  for (long j = 0; j < r; ++j) G.col(j) = Gamma[j];

  DeflateResult out;
  out.Q = orthonormal_complement(G);

  out.reduced.p = d.p - r;
  out.reduced.q1 = d.q1;
  out.reduced.q2 = d.q2;
  for (const auto& s : d.subjects) {
    SubjectRecord rs;
    rs.id = s.id;
    rs.T = s.T;
    rs.x = s.x;
    rs.w = s.w;
    rs.Y = s.Y * out.Q;
    rs.S = out.Q.transpose() * s.S * out.Q;
    out.reduced.subjects.push_back(std::move(rs));
  }
  return out;
}

double dfd(const std::vector<VectorXd>& Gamma, const Dataset& d) {
  const long r = static_cast<long>(Gamma.size());
  MatrixXd G(d.p, r);
  for (long j = 0; j < r; ++j) G.col(j) = Gamma[j];

  double total_T = 0.0;
  for (const auto& s : d.subjects) total_T += static_cast<double>(s.T);

  double logdfd = 0.0;
  for (long i = 0; i < d.n(); ++i) {
    const auto& s = d.subjects[i];
    const MatrixXd M = G.transpose() * s.S * G;
    double logdiag = 0.0;
    for (long j = 0; j < r; ++j) {
      if (M(j, j) <= 0.0) throw DfDSingular("subject index " + std::to_string(i));
      logdiag += std::log(M(j, j));
    }
    double logdet;
    try {
      logdet = logdet_spd(M);
    } catch (const DfDSingular&) {
      throw DfDSingular("subject index " + std::to_string(i));
    }
    logdfd += (static_cast<double>(s.T) / total_T) * (logdiag - logdet);
  }
  return std::exp(logdfd);
}

ComponentSet extract_components(const Dataset& d, int K, int r_max,
                                const EmConfig& cfg) {
  ComponentSet cs;
  const MatrixXd H0 = cfg.h_matrix == EmConfig::HMatrix::pooled
                          ? pooled_covariance(d)
                          : MatrixXd::Identity(d.p, d.p).eval();

  Dataset current = d;
  MatrixXd Qmap = MatrixXd::Identity(d.p, d.p);  // current coords -> original
  for (int r = 0; r < r_max; ++r) {
    FitResult fit;
    try {
      const MatrixXd Hr = cfg.h_matrix == EmConfig::HMatrix::pooled
                              ? pooled_covariance(current)
                              : MatrixXd::Identity(current.p, current.p).eval();
      EmConfig sub = cfg;
      sub.seed = mix64(cfg.seed) + static_cast<std::uint64_t>(r);
      fit = fit_with_restarts(current, K, sub, Hr);
    } catch (const Error& e) {
      cs.error = std::string(e.what()) + " (component " + std::to_string(r + 1) +
                 ")";
      break;
    }

    // Map back to original coordinates and renormalize against H0.
    VectorXd gamma = Qmap * fit.params.gamma;
    gamma /= std::sqrt(gamma.dot(H0 * gamma));
    long imax = 0;
    gamma.cwiseAbs().maxCoeff(&imax);
    if (gamma(imax) < 0) gamma = -gamma;

    cs.gammas.push_back(gamma);
    cs.fits.push_back(std::move(fit));
    const double v = dfd(cs.gammas, d);
    cs.dfd_trace.push_back(v);
    cs.accepted.push_back(v <= cfg.dfd_threshold);
    if (!cs.accepted.back()) break;  // first violation reported, then stop

    if (static_cast<long>(cs.gammas.size()) >= d.p - 1) break;
    try {
      DeflateResult def = deflate(current, {cs.fits.back().params.gamma});
      Qmap = Qmap * def.Q;
      current = std::move(def.reduced);
    } catch (const Error& e) {
      cs.error = e.what();
      break;
    }
  }
  return cs;
}

int select_num_components(const ComponentSet& cs, double threshold) {
  int r = 0;
  for (size_t j = 0; j < cs.dfd_trace.size(); ++j)
    if (cs.dfd_trace[j] <= threshold) r = static_cast<int>(j) + 1;
  return r;
}

}  // namespace capclust
