#include "capclust/simgen.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>

namespace capclust {

SimConfig default_sim_config() {
  SimConfig cfg;
  cfg.alpha_true[2] = (VectorXd(2) << 0.5, -1.0).finished();
  cfg.alpha_true[4] = (VectorXd(2) << -0.25, 0.5).finished();
  cfg.beta_true[2] = {(VectorXd(3) << 1, 1, -1).finished(),
                      (VectorXd(3) << -1, -1, 1).finished()};
  cfg.beta_true[4] = {(VectorXd(3) << 0.5, 0.5, -0.5).finished(),
                      (VectorXd(3) << 0.5, -0.5, 0.5).finished()};
  return cfg;
}

MatrixXd random_orthonormal(long p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd G(p, p);
  for (long i = 0; i < p; ++i)
    for (long j = 0; j < p; ++j) G(i, j) = normal(rng);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = qr.householderQ();
  const MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (long j = 0; j < p; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

namespace {

// Orthonormal completion of the first `s` common columns, per subject.
MatrixXd complete_basis(const MatrixXd& common, Rng& rng) {
  const long p = common.rows();
  const long s = common.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd G(p, p - s);
  for (long i = 0; i < p; ++i)
    for (long j = 0; j < p - s; ++j) G(i, j) = normal(rng);
  G -= common * (common.transpose() * G);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(p, p - s);
  MatrixXd full(p, p);
  full.leftCols(s) = common;
  full.rightCols(p - s) = Q;
  return full;
}

}  // namespace

std::pair<Dataset, SimGroundTruth> generate_dataset(const SimConfig& cfg) {
  if (cfg.K != 2) throw ConfigError("generation supports K = 2");
  for (int dim : cfg.structured_dims) {
    if (dim < 1 || dim > cfg.p) throw ConfigError("structured dim out of range");
    if (!cfg.alpha_true.count(dim) || !cfg.beta_true.count(dim))
      throw ConfigError("missing true coefficients for dim " +
                        std::to_string(dim));
  }
  const long q1 = cfg.structured_dims.empty()
                      ? 3
                      : cfg.beta_true.begin()->second[0].size();
  const long q2 = cfg.structured_dims.empty()
                      ? 2
                      : cfg.alpha_true.begin()->second.size();

  Rng master = make_rng(cfg.seed, 0);
  const MatrixXd Pi = random_orthonormal(cfg.p, master);
  const bool partial =
      cfg.shared_eigenvectors >= 0 && cfg.shared_eigenvectors < cfg.p;

  // Mean log-eigenvalue profile for the unstructured dimensions: linear
  // from high to low across them in index order.
  std::vector<long> unstructured;
  for (long dmn = 1; dmn <= cfg.p; ++dmn)
    if (std::find(cfg.structured_dims.begin(), cfg.structured_dims.end(),
                  static_cast<int>(dmn)) == cfg.structured_dims.end())
      unstructured.push_back(dmn);
  std::map<long, double> mean_log;
  for (size_t j = 0; j < unstructured.size(); ++j) {
    const double frac = unstructured.size() > 1
                            ? static_cast<double>(j) /
                                  static_cast<double>(unstructured.size() - 1)
                            : 0.0;
    mean_log[unstructured[j]] =
        cfg.eigen_mean_high + frac * (cfg.eigen_mean_low - cfg.eigen_mean_high);
  }

  Dataset d;
  d.p = cfg.p;
  d.q1 = q1;
  d.q2 = q2;
  SimGroundTruth truth;
  truth.Pi = Pi;
  truth.beta_true = cfg.beta_true;
  truth.alpha_true = cfg.alpha_true;
  truth.structured_dims = cfg.structured_dims;
  for (int dim : cfg.structured_dims) truth.memberships[dim] = {};

  char idbuf[16];
  for (long i = 0; i < cfg.n; ++i) {
    Rng rng = make_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SubjectRecord s;
    std::snprintf(idbuf, sizeof(idbuf), "s%06ld", i);
    s.id = idbuf;
    s.T = cfg.T;
    // x = (1, Bernoulli(0.5), Normal(0,1), ...), w = (1, Bernoulli(0.5), ...)
    s.x = VectorXd(q1);
    s.x[0] = 1.0;
    if (q1 > 1) s.x[1] = unif(rng) < 0.5 ? 1.0 : 0.0;
    for (long j = 2; j < q1; ++j) s.x[j] = normal(rng);
    s.w = VectorXd(q2);
    s.w[0] = 1.0;
    for (long j = 1; j < q2; ++j) s.w[j] = unif(rng) < 0.5 ? 1.0 : 0.0;

    VectorXd loglam(cfg.p);
    for (int dim : cfg.structured_dims) {
      double lin = s.w.dot(cfg.alpha_true.at(dim));
      if (cfg.misspec == SimConfig::Misspec::both_interactions)
        lin += cfg.interaction_coef * s.w[1] * s.x[1];
      const double p2 = 1.0 / (1.0 + std::exp(-lin));
      const int k = unif(rng) < p2 ? 1 : 0;
      truth.memberships[dim].push_back(k);
      double lv = s.x.dot(cfg.beta_true.at(dim)[k]);
      if (cfg.misspec != SimConfig::Misspec::none)
        lv += cfg.interaction_coef * s.x[1] * s.x[2];
      loglam[dim - 1] = lv;
    }
    for (long dmn : unstructured)
      loglam[dmn - 1] = mean_log[dmn] + cfg.eigen_sd * normal(rng);

    MatrixXd Pi_i;
    if (partial) {
      Pi_i = complete_basis(Pi.leftCols(cfg.shared_eigenvectors), rng);
    } else {
      Pi_i = Pi;
    }

    VectorXd sd = (loglam.array() / 2.0).exp();
    if (cfg.noise == SimConfig::Noise::student_t)
      sd *= std::sqrt((cfg.t_df - 2.0) / cfg.t_df);

    s.Y = MatrixXd(cfg.T, cfg.p);
    std::gamma_distribution<double> chisq(cfg.t_df / 2.0, 2.0);
    for (long t = 0; t < cfg.T; ++t) {
      VectorXd z(cfg.p);
      for (long j = 0; j < cfg.p; ++j) z[j] = sd[j] * normal(rng);
      VectorXd y = Pi_i * z;
      if (cfg.noise == SimConfig::Noise::student_t)
        y *= std::sqrt(cfg.t_df / chisq(rng));
      s.Y.row(t) = y.transpose();
    }
    s.S = sample_covariance(s.Y);
    d.subjects.push_back(std::move(s));
  }
  return {std::move(d), std::move(truth)};
}

}  // namespace capclust
