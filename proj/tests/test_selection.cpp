#include <doctest.h>

#include <cmath>

#include "capclust/selection.hpp"
#include "capclust/simgen.hpp"
#include "helpers.hpp"

using namespace capclust;

namespace {

Dataset shell_dataset(long p, long q1, long q2, const std::vector<long>& Ts) {
  Dataset d;
  d.p = p;
  d.q1 = q1;
  d.q2 = q2;
  for (long T : Ts) {
    SubjectRecord s;
    s.id = "s" + std::to_string(d.n());
    s.T = T;
    s.S = MatrixXd::Identity(p, p);
    s.x = VectorXd::Ones(q1);
    s.w = VectorXd::Ones(q2);
    d.subjects.push_back(std::move(s));
  }
  return d;
}

FitResult fit_with_loglik(int K, double ll) {
  FitResult f;
  f.params.K = K;
  f.loglik = ll;
  return f;
}

}  // namespace

TEST_CASE("bic arithmetic") {
  const Dataset d = shell_dataset(50, 3, 2, {60, 40});
  const double logT = std::log(100.0);
  SUBCASE("K=2, q1=3, q2=2, p=50 gives M=58") {
    CHECK(bic(fit_with_loglik(2, -500.0), d) ==
          doctest::Approx(58.0 * logT + 1000.0).epsilon(1e-12));
  }
  SUBCASE("K=1 drops the gating parameters: M = q1 + p") {
    CHECK(bic(fit_with_loglik(1, -500.0), d) ==
          doctest::Approx(53.0 * logT + 1000.0).epsilon(1e-12));
  }
  SUBCASE("linearity in the log-likelihood") {
    const double b0 = bic(fit_with_loglik(2, -500.0), d);
    const double b1 = bic(fit_with_loglik(2, -510.0), d);
    CHECK(b1 - b0 == doctest::Approx(20.0).epsilon(1e-12));
  }
}

TEST_CASE("select_num_clusters") {
  SimConfig scfg = default_sim_config();
  scfg.p = 8;
  scfg.n = 60;
  scfg.T = 60;
  scfg.structured_dims = {2};

  EmConfig cfg;
  cfg.n_restarts = 2;
  cfg.max_components = 1;

  SUBCASE("singleton range returns that K") {
    scfg.seed = 1301;
    auto [data, truth] = generate_dataset(scfg);
    cfg.seed = 1302;
    const BicReport r = select_num_clusters(data, 2, 2, cfg);
    CHECK(r.chosen_K == 2);
    CHECK(r.average.count(2) == 1);
  }
  SUBCASE("invalid range is rejected") {
    scfg.seed = 1303;
    auto [data, truth] = generate_dataset(scfg);
    CHECK_THROWS_AS(select_num_clusters(data, 2, 1, cfg), ConfigError);
    CHECK_THROWS_AS(select_num_clusters(data, 0, 2, cfg), ConfigError);
  }
  SUBCASE("single-cluster data mostly selects K=1") {
    // identical expert coefficients in both clusters: one effective cluster
    scfg.beta_true[2] = {scfg.beta_true[2][0], scfg.beta_true[2][0]};
    int chose_one = 0;
    const int runs = 20;
    for (int r = 0; r < runs; ++r) {
      scfg.seed = 1400 + static_cast<std::uint64_t>(r);
      auto [data, truth] = generate_dataset(scfg);
      cfg.seed = 1500 + static_cast<std::uint64_t>(r);
      try {
        if (select_num_clusters(data, 1, 2, cfg).chosen_K == 1) ++chose_one;
      } catch (const Error&) {
        // counted as a miss
      }
    }
    CHECK(chose_one > runs / 2);
  }
}
