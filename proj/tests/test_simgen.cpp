#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "capclust/simgen.hpp"
#include "helpers.hpp"

using namespace capclust;

namespace {

// Reconstruct the population covariance of one subject when eigen_sd = 0
// (deterministic unstructured log-eigenvalues on a linear profile).
MatrixXd population_covariance(const SimConfig& cfg, const MatrixXd& Pi,
                               const VectorXd& x, int member_dim2) {
  std::vector<long> unstructured;
  for (long dim = 1; dim <= cfg.p; ++dim)
    if (std::find(cfg.structured_dims.begin(), cfg.structured_dims.end(),
                  static_cast<int>(dim)) == cfg.structured_dims.end())
      unstructured.push_back(dim);
  VectorXd lam(cfg.p);
  for (size_t j = 0; j < unstructured.size(); ++j) {
    const double frac =
        unstructured.size() > 1
            ? static_cast<double>(j) / static_cast<double>(unstructured.size() - 1)
            : 0.0;
    lam[unstructured[j] - 1] = std::exp(
        cfg.eigen_mean_high + frac * (cfg.eigen_mean_low - cfg.eigen_mean_high));
  }
  for (int dim : cfg.structured_dims) {
    double lv = x.dot(cfg.beta_true.at(dim)[member_dim2]);
    if (cfg.misspec != SimConfig::Misspec::none)
      lv += cfg.interaction_coef * x[1] * x[2];
    lam[dim - 1] = std::exp(lv);
  }
  return Pi * lam.asDiagonal() * Pi.transpose();
}

double sample_kurtosis(const VectorXd& v) {
  const double m = v.mean();
  double m2 = 0.0, m4 = 0.0;
  for (long i = 0; i < v.size(); ++i) {
    const double d = v[i] - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(v.size());
  m4 /= static_cast<double>(v.size());
  return m4 / (m2 * m2);
}

}  // namespace

TEST_CASE("random_orthonormal") {
  Rng rng = make_rng(3001);
  SUBCASE("p=1 fixes the sign to +1") {
    CHECK(random_orthonormal(1, rng)(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("orthonormality at p=50") {
    const MatrixXd Q = random_orthonormal(50, rng);
    CHECK((Q.transpose() * Q - MatrixXd::Identity(50, 50))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
  }
  SUBCASE("distinct draws from distinct streams") {
    Rng r1 = make_rng(1), r2 = make_rng(2);
    CHECK((random_orthonormal(4, r1) - random_orthonormal(4, r2)).norm() > 0);
  }
}

TEST_CASE("generate_dataset is deterministic per seed") {
  SimConfig cfg = default_sim_config();
  cfg.p = 6;
  cfg.n = 5;
  cfg.T = 8;
  cfg.seed = 3100;
  auto [a, ta] = generate_dataset(cfg);
  auto [b, tb] = generate_dataset(cfg);
  REQUIRE(a.n() == b.n());
  for (long i = 0; i < a.n(); ++i) {
    CHECK(a.subjects[i].Y == b.subjects[i].Y);
    CHECK(a.subjects[i].x == b.subjects[i].x);
  }
  CHECK(ta.memberships.at(2) == tb.memberships.at(2));
  CHECK(ta.Pi == tb.Pi);
}

TEST_CASE("empirical covariance converges to the population covariance") {
  SimConfig cfg = default_sim_config();
  cfg.p = 5;
  cfg.n = 1;
  cfg.T = 10000;
  cfg.structured_dims = {2};
  cfg.eigen_sd = 0.0;
  cfg.seed = 3200;
  auto [d, truth] = generate_dataset(cfg);
  const MatrixXd Sigma = population_covariance(
      cfg, truth.Pi, d.subjects[0].x, truth.memberships.at(2)[0]);
  const double rel = (d.subjects[0].S - Sigma).norm() / Sigma.norm();
  CHECK(rel <= 0.1);
}

TEST_CASE("variance along pi_2 follows the expert model") {
  SimConfig cfg = default_sim_config();
  cfg.p = 5;
  cfg.n = 5;
  cfg.T = 20000;
  cfg.structured_dims = {2};
  cfg.seed = 3300;
  auto [d, truth] = generate_dataset(cfg);
  for (long i = 0; i < d.n(); ++i) {
    const int k = truth.memberships.at(2)[i];
    const double expected =
        std::exp(d.subjects[i].x.dot(cfg.beta_true.at(2)[k]));
    const VectorXd z = d.subjects[i].Y * truth.Pi.col(1);
    const double var = z.squaredNorm() / static_cast<double>(cfg.T);
    CHECK(var / expected == doctest::Approx(1.0).epsilon(0.08));
  }
}

TEST_CASE("variance interaction misspecification shifts the variance") {
  SimConfig cfg = default_sim_config();
  cfg.p = 5;
  cfg.n = 6;
  cfg.T = 20000;
  cfg.structured_dims = {2};
  cfg.misspec = SimConfig::Misspec::variance_interaction;
  cfg.seed = 3350;
  auto [d, truth] = generate_dataset(cfg);
  for (long i = 0; i < d.n(); ++i) {
    const int k = truth.memberships.at(2)[i];
    const auto& x = d.subjects[i].x;
    const double expected = std::exp(x.dot(cfg.beta_true.at(2)[k]) +
                                     cfg.interaction_coef * x[1] * x[2]);
    const VectorXd z = d.subjects[i].Y * truth.Pi.col(1);
    const double var = z.squaredNorm() / static_cast<double>(cfg.T);
    CHECK(var / expected == doctest::Approx(1.0).epsilon(0.08));
  }
}

TEST_CASE("gating probabilities match the softmax model") {
  SimConfig cfg = default_sim_config();
  cfg.p = 5;
  cfg.n = 10000;
  cfg.T = 2;
  cfg.structured_dims = {2};
  cfg.seed = 3400;
  auto [d, truth] = generate_dataset(cfg);
  // alpha_2 = (0.5, -1): P(cluster 2 | w1=0) = e^0.5/(1+e^0.5) ~ 0.622
  long n0 = 0, c0 = 0, n1 = 0, c1 = 0;
  for (long i = 0; i < d.n(); ++i) {
    const int k = truth.memberships.at(2)[i];
    if (d.subjects[i].w[1] < 0.5) {
      ++n0;
      c0 += k;
    } else {
      ++n1;
      c1 += k;
    }
  }
  const double p0 = std::exp(0.5) / (1.0 + std::exp(0.5));
  const double p1 = std::exp(-0.5) / (1.0 + std::exp(-0.5));
  CHECK(std::abs(static_cast<double>(c0) / n0 - p0) <= 0.03);
  CHECK(std::abs(static_cast<double>(c1) / n1 - p1) <= 0.03);
}

TEST_CASE("student-t noise keeps the covariance but fattens the tails") {
  SimConfig base = default_sim_config();
  base.p = 4;
  base.n = 1;
  base.T = 50000;
  base.structured_dims = {2};
  base.eigen_sd = 0.0;
  base.seed = 3500;

  SimConfig tcfg = base;
  tcfg.noise = SimConfig::Noise::student_t;
  auto [dg, tg] = generate_dataset(base);
  auto [dt, tt] = generate_dataset(tcfg);

  // variance along an unstructured eigenvector matches exp(mean log-lambda)
  const double lam_first = std::exp(base.eigen_mean_high);
  const VectorXd zg = dg.subjects[0].Y * tg.Pi.col(0);
  const VectorXd zt = dt.subjects[0].Y * tt.Pi.col(0);
  CHECK(zg.squaredNorm() / 50000.0 / lam_first ==
        doctest::Approx(1.0).epsilon(0.15));
  CHECK(zt.squaredNorm() / 50000.0 / lam_first ==
        doctest::Approx(1.0).epsilon(0.15));
  // Gaussian kurtosis ~3; t(5) kurtosis ~9
  CHECK(sample_kurtosis(zg) < 4.0);
  CHECK(sample_kurtosis(zt) > 4.5);
}

TEST_CASE("partial common eigenstructure shares only the leading columns") {
  SimConfig cfg = default_sim_config();
  cfg.p = 6;
  cfg.n = 6;
  cfg.T = 5000;
  cfg.structured_dims = {2};
  cfg.shared_eigenvectors = 3;
  cfg.seed = 3600;
  auto [d, truth] = generate_dataset(cfg);
  const MatrixXd G = truth.Pi.leftCols(3);
  for (const auto& s : d.subjects) {
    const MatrixXd M = G.transpose() * s.S * G;
    for (long a = 0; a < 3; ++a)
      for (long b = 0; b < 3; ++b)
        if (a != b)
          CHECK(std::abs(M(a, b)) / std::sqrt(M(a, a) * M(b, b)) <= 0.1);
  }
}

TEST_CASE("config validation") {
  SimConfig cfg = default_sim_config();
  cfg.K = 3;
  CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
  cfg = default_sim_config();
  cfg.structured_dims = {2, 99};
  cfg.p = 10;
  CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
}
