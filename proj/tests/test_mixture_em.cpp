#include <doctest.h>

#include <cmath>

#include "capclust/linalg.hpp"
#include "capclust/mixture_em.hpp"
#include "helpers.hpp"

using namespace capclust;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_logpdf(double z, double var) {
  return -0.5 * (kLog2Pi + std::log(var) + z * z / var);
}

std::vector<double> softmax_probs(const VectorXd& w,
                                  const std::vector<VectorXd>& alpha) {
  std::vector<double> u, out;
  double denom = 0.0;
  for (const auto& a : alpha) {
    u.push_back(std::exp(w.dot(a)));
    denom += u.back();
  }
  for (double v : u) out.push_back(v / denom);
  return out;
}

// Plain (non-log-domain) expert density for small instances.
double expert_density(const SubjectRecord& s, const VectorXd& gamma,
                      const VectorXd& beta) {
  const double var = std::exp(s.x.dot(beta));
  double f = 1.0;
  for (long t = 0; t < s.T; ++t) {
    const double z = gamma.dot(s.Y.row(t).transpose());
    f *= std::exp(normal_logpdf(z, var));
  }
  return f;
}

ModelParams random_params(const Dataset& d, int K, Rng& rng) {
  ModelParams p;
  p.K = K;
  p.gamma = testutil::random_vector(d.p, rng).normalized();
  for (int k = 0; k < K; ++k) {
    p.beta.push_back(0.3 * testutil::random_vector(d.q1, rng));
    p.alpha.push_back(k == 0 ? VectorXd::Zero(d.q2).eval()
                             : (0.3 * testutil::random_vector(d.q2, rng)).eval());
  }
  return p;
}

}  // namespace

TEST_CASE("log_expert_density") {
  SUBCASE("T=1 equals the standard normal log-density") {
    const double z = 0.7, var = 2.3;
    MatrixXd Y(1, 1);
    Y << z;
    auto s = testutil::subject_from_Y("a", Y, VectorXd::Ones(1),
                                      VectorXd::Ones(1));
    VectorXd gamma = VectorXd::Ones(1);
    VectorXd beta = VectorXd::Constant(1, std::log(var));
    CHECK(log_expert_density(s, gamma, beta) ==
          doctest::Approx(normal_logpdf(z, var)).epsilon(1e-12));
  }
  SUBCASE("variance exactly matched") {
    Rng rng = make_rng(10);
    auto s = testutil::subject_from_Y("a", testutil::random_matrix(6, 3, rng),
                                      VectorXd::Ones(1), VectorXd::Ones(1));
    VectorXd gamma = testutil::random_vector(3, rng);
    const double q = gamma.dot(s.S * gamma);
    VectorXd beta = VectorXd::Constant(1, std::log(q));
    CHECK(log_expert_density(s, gamma, beta) ==
          doctest::Approx(-0.5 * 6 * (kLog2Pi + std::log(q) + 1.0))
              .epsilon(1e-12));
  }
  SUBCASE("brute-force per-observation oracle, T=5") {
    Rng rng = make_rng(11);
    VectorXd x(2);
    x << 1.0, 0.4;
    auto s = testutil::subject_from_Y("a", testutil::random_matrix(5, 4, rng),
                                      x, VectorXd::Ones(1));
    const VectorXd gamma = testutil::random_vector(4, rng);
    VectorXd beta(2);
    beta << 0.3, -0.8;
    double oracle = 0.0;
    for (long t = 0; t < 5; ++t)
      oracle += normal_logpdf(gamma.dot(s.Y.row(t).transpose()),
                              std::exp(x.dot(beta)));
    CHECK(log_expert_density(s, gamma, beta) ==
          doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("log_gating and predict_membership") {
  SUBCASE("zero coefficients give uniform probabilities") {
    std::vector<VectorXd> alpha(3, VectorXd::Zero(2));
    const VectorXd lp = log_gating(VectorXd::Ones(2), alpha);
    for (int k = 0; k < 3; ++k)
      CHECK(std::exp(lp[k]) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("hand evaluation") {
    VectorXd w(2);
    w << 1.0, 0.0;
    std::vector<VectorXd> alpha = {VectorXd::Zero(2),
                                   (VectorXd(2) << 0.5, -1.0).finished()};
    ModelParams p;
    p.alpha = alpha;
    p.K = 2;
    const VectorXd pi = predict_membership(w, p);
    const double e = std::exp(0.5);
    CHECK(pi[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(pi.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("e_step") {
  Dataset d = testutil::random_dataset(6, 2, 3, 2, 2, 21);
  Rng rng = make_rng(22);

  SUBCASE("K=1 gives unit responsibilities") {
    ModelParams p = random_params(d, 1, rng);
    const auto r = e_step(d, p);
    CHECK((r.eta.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("symmetric parameters give 1/2") {
    ModelParams p = random_params(d, 2, rng);
    p.beta[1] = p.beta[0];
    p.alpha[1].setZero();
    const auto r = e_step(d, p);
    CHECK((r.eta.array() - 0.5).abs().maxCoeff() <= 1e-14);
  }
  SUBCASE("direct-density oracle on a T=3, p=2 instance") {
    ModelParams p = random_params(d, 2, rng);
    const auto r = e_step(d, p);
    for (long i = 0; i < d.n(); ++i) {
      const auto probs = softmax_probs(d.subjects[i].w, p.alpha);
      const double f1 = probs[0] * expert_density(d.subjects[i], p.gamma, p.beta[0]);
      const double f2 = probs[1] * expert_density(d.subjects[i], p.gamma, p.beta[1]);
      CHECK(r.eta(i, 0) == doctest::Approx(f1 / (f1 + f2)).epsilon(1e-10));
      CHECK(r.eta(i, 0) + r.eta(i, 1) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("rows sum to one for K=3") {
    ModelParams p = random_params(d, 3, rng);
    const auto r = e_step(d, p);
    for (long i = 0; i < d.n(); ++i)
      CHECK(r.eta.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fit_gating") {
  SUBCASE("intercept-only recovers marginal log-odds") {
    Dataset d = testutil::random_dataset(8, 2, 4, 1, 1, 31);
    Responsibilities r;
    r.eta = MatrixXd(8, 2);
    r.eta.col(0).setConstant(0.3);
    r.eta.col(1).setConstant(0.7);
    const auto alpha = fit_gating(r, d);
    CHECK(alpha[0][0] == 0.0);
    CHECK(alpha[1][0] == doctest::Approx(std::log(0.7 / 0.3)).epsilon(1e-8));
  }
  SUBCASE("balanced responsibilities give zero coefficients") {
    Dataset d = testutil::random_dataset(8, 2, 4, 1, 2, 32);
    Responsibilities r;
    r.eta = MatrixXd::Constant(8, 2, 0.5);
    const auto alpha = fit_gating(r, d);
    CHECK(alpha[1].cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("fitted probabilities match group rates with binary w") {
    Dataset d = testutil::random_dataset(40, 2, 4, 1, 2, 33);
    Responsibilities r;
    r.eta = MatrixXd(40, 2);
    for (long i = 0; i < 40; ++i) {
      const double p2 = d.subjects[i].w[1] > 0.5 ? 0.9 : 0.2;
      r.eta(i, 0) = 1.0 - p2;
      r.eta(i, 1) = p2;
    }
    const auto alpha = fit_gating(r, d);
    for (long i = 0; i < 40; ++i) {
      const auto probs = softmax_probs(d.subjects[i].w, alpha);
      const double expect = d.subjects[i].w[1] > 0.5 ? 0.9 : 0.2;
      CHECK(std::abs(probs[1] - expect) <= 1e-3);
    }
  }
  SUBCASE("perfect separation stays finite") {
    Dataset d = testutil::random_dataset(30, 2, 4, 1, 2, 34);
    Responsibilities r;
    r.eta = MatrixXd(30, 2);
    for (long i = 0; i < 30; ++i) {
      const double p2 = d.subjects[i].w[1] > 0.5 ? 1.0 : 0.0;
      r.eta(i, 0) = 1.0 - p2;
      r.eta(i, 1) = p2;
    }
    const auto alpha = fit_gating(r, d);
    CHECK(alpha[1].allFinite());
    for (long i = 0; i < 30; ++i) {
      const auto probs = softmax_probs(d.subjects[i].w, alpha);
      const double expect = d.subjects[i].w[1] > 0.5 ? 1.0 : 0.0;
      CHECK(std::abs(probs[1] - expect) <= 1e-3);
    }
  }
}

TEST_CASE("update_beta_newton") {
  SUBCASE("single subject, intercept-only closed form") {
    Dataset d = testutil::random_dataset(1, 3, 8, 1, 1, 41);
    Rng rng = make_rng(42);
    const VectorXd gamma = testutil::random_vector(3, rng);
    Responsibilities r;
    r.eta = MatrixXd::Ones(1, 1);
    const auto beta =
        update_beta_newton(r, d, gamma, {VectorXd::Zero(1)});
    const double q = gamma.dot(d.subjects[0].S * gamma);
    CHECK(beta[0][0] == doctest::Approx(std::log(q)).epsilon(1e-8));
  }
  SUBCASE("n subjects, equal T: log of the mean projected variance") {
    Dataset d = testutil::random_dataset(7, 3, 8, 1, 1, 43);
    Rng rng = make_rng(44);
    const VectorXd gamma = testutil::random_vector(3, rng);
    Responsibilities r;
    r.eta = MatrixXd::Ones(7, 1);
    const auto beta =
        update_beta_newton(r, d, gamma, {VectorXd::Zero(1)});
    double mean_q = 0.0;
    for (const auto& s : d.subjects) mean_q += gamma.dot(s.S * gamma);
    mean_q /= 7.0;
    CHECK(beta[0][0] == doctest::Approx(std::log(mean_q)).epsilon(1e-8));
  }
  SUBCASE("gradient vanishes at the optimum (finite differences)") {
    Dataset d = testutil::random_dataset(10, 3, 8, 2, 1, 45);
    Rng rng = make_rng(46);
    const VectorXd gamma = testutil::random_vector(3, rng);
    Responsibilities r;
    r.eta = MatrixXd(10, 2);
    for (long i = 0; i < 10; ++i) {
      const double u = 0.2 + 0.6 * (static_cast<double>(i) / 9.0);
      r.eta(i, 0) = u;
      r.eta(i, 1) = 1.0 - u;
    }
    const auto beta = update_beta_newton(
        r, d, gamma, {VectorXd::Zero(2), VectorXd::Zero(2)});
    auto objective = [&](int k, const VectorXd& b) {
      double f = 0.0;
      for (long i = 0; i < 10; ++i) {
        const auto& s = d.subjects[i];
        const double lp = s.x.dot(b);
        f += 0.5 * static_cast<double>(s.T) * r.eta(i, k) *
             (lp + std::exp(-lp) * gamma.dot(s.S * gamma));
      }
      return f;
    };
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k)
      for (long c = 0; c < 2; ++c) {
        VectorXd up = beta[k], dn = beta[k];
        up[c] += h;
        dn[c] -= h;
        const double g = (objective(k, up) - objective(k, dn)) / (2.0 * h);
        CHECK(std::abs(g) <= 1e-5 * (1.0 + std::abs(objective(k, beta[k]))));
      }
  }
  SUBCASE("empty cluster is rejected") {
    Dataset d = testutil::random_dataset(5, 3, 8, 1, 1, 47);
    Responsibilities r;
    r.eta = MatrixXd(5, 2);
    r.eta.col(0).setOnes();
    r.eta.col(1).setZero();
    Rng rng = make_rng(48);
    const VectorXd gamma = testutil::random_vector(3, rng);
    CHECK_THROWS_AS(update_beta_newton(r, d, gamma,
                                       {VectorXd::Zero(1), VectorXd::Zero(1)}),
                    EmptyCluster);
  }
}

TEST_CASE("observed_loglik") {
  Rng rng = make_rng(51);
  SUBCASE("K=1 is the sum of expert densities") {
    Dataset d = testutil::random_dataset(4, 2, 3, 2, 2, 52);
    ModelParams p = random_params(d, 1, rng);
    double expect = 0.0;
    for (const auto& s : d.subjects)
      expect += log_expert_density(s, p.gamma, p.beta[0]);
    CHECK(observed_loglik(d, p) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("invariant under relabeling clusters 2..K") {
    Dataset d = testutil::random_dataset(4, 2, 3, 2, 2, 53);
    ModelParams p = random_params(d, 3, rng);
    ModelParams q = p;
    std::swap(q.beta[1], q.beta[2]);
    std::swap(q.alpha[1], q.alpha[2]);
    CHECK(observed_loglik(d, p) ==
          doctest::Approx(observed_loglik(d, q)).epsilon(1e-12));
  }
  SUBCASE("brute-force latent marginalization, n=3 K=2 T=2") {
    Dataset d = testutil::random_dataset(3, 2, 2, 2, 2, 54);
    ModelParams p = random_params(d, 2, rng);
    double total = 0.0;
    for (int mask = 0; mask < 8; ++mask) {
      double term = 1.0;
      for (long i = 0; i < 3; ++i) {
        const int k = (mask >> i) & 1;
        const auto probs = softmax_probs(d.subjects[i].w, p.alpha);
        term *= probs[k] * expert_density(d.subjects[i], p.gamma, p.beta[k]);
      }
      total += term;
    }
    CHECK(observed_loglik(d, p) ==
          doctest::Approx(std::log(total)).epsilon(1e-8));
  }
}

TEST_CASE("em_fit") {
  SUBCASE("K=1 converges fast to the stationary pair") {
    Dataset d = testutil::random_dataset(10, 4, 30, 1, 1, 61);
    const MatrixXd H = pooled_covariance(d);
    EmConfig cfg;
    cfg.n_restarts = 1;
    Rng rng = make_rng(62);
    const FitResult fit = em_fit(d, 1, random_init(d, 1, H, rng), cfg, H);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 3);
    // gamma solves the pencil built from the converged beta
    const MatrixXd A = weighted_scatter(fit.resp, d, fit.params.beta);
    const auto ge = smallest_generalized_eigen(A, H);
    CHECK((fit.params.gamma - ge.gamma).cwiseAbs().maxCoeff() <= 1e-6);
    // intercept-only beta matches the closed form
    double mean_q = 0.0;
    for (const auto& s : d.subjects)
      mean_q += fit.params.gamma.dot(s.S * fit.params.gamma);
    mean_q /= static_cast<double>(d.n());
    CHECK(fit.params.beta[0][0] ==
          doctest::Approx(std::log(mean_q)).epsilon(1e-6));
  }
  SUBCASE("trace is nondecreasing, K=2 random data") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      Dataset d = testutil::random_dataset(12, 3, 10, 2, 2, 70 + s);
      const MatrixXd H = pooled_covariance(d);
      EmConfig cfg;
      Rng rng = make_rng(90 + s);
      try {
        const FitResult fit = em_fit(d, 2, random_init(d, 2, H, rng), cfg, H);
        for (size_t t = 1; t < fit.trace.size(); ++t)
          CHECK(fit.trace[t] >=
                fit.trace[t - 1] - 1e-8 * (1.0 + std::abs(fit.trace[t - 1])));
      } catch (const Error&) {
        // degenerate random instance; covered in bulk by the acceptance suite
      }
    }
  }
  SUBCASE("relabeling the initialization does not change the optimum") {
    Dataset d = testutil::random_dataset(15, 3, 20, 2, 2, 81);
    const MatrixXd H = pooled_covariance(d);
    EmConfig cfg;
    Rng rng = make_rng(82);
    ModelParams init = random_init(d, 2, H, rng);
    init.beta[1][0] += 1.0;  // break symmetry
    ModelParams swapped = init;
    std::swap(swapped.beta[0], swapped.beta[1]);
    // swapping clusters re-references the gating coefficients
    swapped.alpha[1] = init.alpha[0] - init.alpha[1];
    swapped.alpha[0].setZero();
    const FitResult a = em_fit(d, 2, init, cfg, H);
    const FitResult b = em_fit(d, 2, swapped, cfg, H);
    CHECK(a.loglik == doctest::Approx(b.loglik).epsilon(1e-6));
  }
}

TEST_CASE("fit_with_restarts") {
  Dataset d = testutil::random_dataset(15, 3, 20, 2, 2, 91);
  EmConfig cfg;
  cfg.n_restarts = 1;
  cfg.seed = 901;
  SUBCASE("deterministic given a seed") {
    const FitResult a = fit_with_restarts(d, 2, cfg);
    const FitResult b = fit_with_restarts(d, 2, cfg);
    CHECK(a.loglik == b.loglik);
    CHECK(a.labels == b.labels);
    CHECK(a.params.gamma == b.params.gamma);
  }
  SUBCASE("best of 10 at least as good as best of 1") {
    const FitResult one = fit_with_restarts(d, 2, cfg);
    EmConfig cfg10 = cfg;
    cfg10.n_restarts = 10;
    const FitResult ten = fit_with_restarts(d, 2, cfg10);
    CHECK(ten.loglik >= one.loglik - 1e-12);
  }
}
