#include "capclust/mixture_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "capclust/linalg.hpp"

namespace capclust {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kRespFloor = 1e-300;
constexpr double kEmptyClusterTol = 1e-6;

double quad_form(const MatrixXd& S, const VectorXd& g) {
  return g.dot(S * g);
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericOverflow(what);
}

}  // namespace

double log_expert_density(const SubjectRecord& subject, const VectorXd& gamma,
                          const VectorXd& beta_k) {
  if (gamma.size() != subject.S.rows() || beta_k.size() != subject.x.size())
    throw DimensionMismatch("log_expert_density");
  const double lp = subject.x.dot(beta_k);
  const double q = quad_form(subject.S, gamma);
  const double v =
      -0.5 * static_cast<double>(subject.T) * (kLog2Pi + lp + std::exp(-lp) * q);
  check_finite(v, "log_expert_density");
  return v;
}

VectorXd log_gating(const VectorXd& w, const std::vector<VectorXd>& alpha) {
  const int K = static_cast<int>(alpha.size());
  VectorXd u(K);
  for (int k = 0; k < K; ++k) u[k] = w.dot(alpha[k]);
  const double m = u.maxCoeff();
  const double lse = m + std::log((u.array() - m).exp().sum());
  return u.array() - lse;
}

Responsibilities e_step(const Dataset& d, const ModelParams& params) {
  const long n = d.n();
  const int K = params.K;
  Responsibilities r;
  r.eta = MatrixXd(n, K);
  for (long i = 0; i < n; ++i) {
    const auto& s = d.subjects[i];
    const VectorXd lpi = log_gating(s.w, params.alpha);
    VectorXd lw(K);
    for (int k = 0; k < K; ++k)
      lw[k] = lpi[k] + log_expert_density(s, params.gamma, params.beta[k]);
    const double m = lw.maxCoeff();
    if (!std::isfinite(m))
      throw DegenerateResponsibility("subject index " + std::to_string(i));
    const VectorXd e = (lw.array() - m).exp().max(kRespFloor).matrix();
    r.eta.row(i) = (e / e.sum()).transpose();
  }
  return r;
}

std::vector<VectorXd> fit_gating(const Responsibilities& resp, const Dataset& d,
                                 const EmConfig& cfg) {
  const long n = d.n();
  const int K = static_cast<int>(resp.eta.cols());
  const long q2 = d.q2;
  std::vector<VectorXd> alpha(K, VectorXd::Zero(q2));
  if (K == 1) return alpha;

  const long dim = (K - 1) * q2;

  auto objective = [&](const std::vector<VectorXd>& a) {
    double f = 0.0;
    for (long i = 0; i < n; ++i) {
      const VectorXd lpi = log_gating(d.subjects[i].w, a);
      for (int k = 0; k < K; ++k)
        f += static_cast<double>(d.subjects[i].T) * resp.eta(i, k) * lpi[k];
    }
    return f;
  };

  double f = objective(alpha);
  for (int iter = 0; iter < cfg.gating_max_iter; ++iter) {
    VectorXd grad = VectorXd::Zero(dim);
    MatrixXd hess = MatrixXd::Zero(dim, dim);
    for (long i = 0; i < n; ++i) {
      const auto& s = d.subjects[i];
      const double Ti = static_cast<double>(s.T);
      const VectorXd pi = log_gating(s.w, alpha).array().exp();
      for (int k = 1; k < K; ++k) {
        grad.segment((k - 1) * q2, q2) +=
            Ti * (resp.eta(i, k) - pi[k]) * s.w;
        for (int l = 1; l < K; ++l) {
          const double c =
              -Ti * pi[k] * ((k == l ? 1.0 : 0.0) - pi[l]);
          hess.block((k - 1) * q2, (l - 1) * q2, q2, q2) +=
              c * (s.w * s.w.transpose());
        }
      }
    }
    if (grad.cwiseAbs().maxCoeff() <= 1e-8) break;

    hess.diagonal().array() -= cfg.ridge;  // keep negative definite
    VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) throw GatingDiverged("singular system");

    // Newton ascent with step halving on the objective.
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      std::vector<VectorXd> cand = alpha;
      for (int k = 1; k < K; ++k)
        cand[k] -= t * step.segment((k - 1) * q2, q2);
      const double fc = objective(cand);
      if (std::isfinite(fc) && fc >= f - 1e-12 * (1.0 + std::abs(f))) {
        alpha = std::move(cand);
        f = fc;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) throw GatingDiverged("step halving exhausted");
  }

  // Final score check.
  VectorXd grad = VectorXd::Zero(dim);
  for (long i = 0; i < n; ++i) {
    const auto& s = d.subjects[i];
    const VectorXd pi = log_gating(s.w, alpha).array().exp();
    for (int k = 1; k < K; ++k)
      grad.segment((k - 1) * q2, q2) +=
          static_cast<double>(s.T) * (resp.eta(i, k) - pi[k]) * s.w;
  }
  if (grad.cwiseAbs().maxCoeff() > 1e-6)
    throw GatingDiverged("score max-norm " +
                         std::to_string(grad.cwiseAbs().maxCoeff()));
  return alpha;
}

std::vector<VectorXd> update_beta_newton(const Responsibilities& resp,
                                         const Dataset& d,
                                         const VectorXd& gamma,
                                         const std::vector<VectorXd>& beta_init,
                                         const EmConfig& cfg) {
  const long n = d.n();
  const int K = static_cast<int>(resp.eta.cols());
  VectorXd q(n);
  for (long i = 0; i < n; ++i) q[i] = quad_form(d.subjects[i].S, gamma);

  std::vector<VectorXd> beta = beta_init;
  for (int k = 0; k < K; ++k) {
    if (resp.eta.col(k).maxCoeff() < kEmptyClusterTol)
      throw EmptyCluster("cluster " + std::to_string(k + 1));

    auto objective = [&](const VectorXd& b) {
      double f = 0.0;
      for (long i = 0; i < n; ++i) {
        const double c = 0.5 * static_cast<double>(d.subjects[i].T) *
                         resp.eta(i, k);
        const double lp = d.subjects[i].x.dot(b);
        f += c * (lp + std::exp(-lp) * q[i]);
      }
      return f;
    };

    double f = objective(beta[k]);
    for (int iter = 0; iter < cfg.newton_max_iter; ++iter) {
      VectorXd grad = VectorXd::Zero(d.q1);
      MatrixXd hess = MatrixXd::Zero(d.q1, d.q1);
      for (long i = 0; i < n; ++i) {
        const auto& s = d.subjects[i];
        const double c = 0.5 * static_cast<double>(s.T) * resp.eta(i, k);
        const double e = std::exp(-s.x.dot(beta[k])) * q[i];
        grad += c * (1.0 - e) * s.x;
        hess += c * e * (s.x * s.x.transpose());
      }
      if (grad.cwiseAbs().maxCoeff() <= 1e-8) break;

      hess.diagonal().array() += cfg.ridge;
      Eigen::LDLT<MatrixXd> ldlt(hess);
      VectorXd step = ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite())
        throw EmptyCluster("singular Hessian for cluster " +
                           std::to_string(k + 1));

      double t = 1.0;
      bool accepted = false;
      for (int h = 0; h < 30; ++h) {
        const VectorXd cand = beta[k] - t * step;
        const double fc = objective(cand);
        if (std::isfinite(fc) && fc <= f + 1e-12 * (1.0 + std::abs(f))) {
          beta[k] = cand;
          f = fc;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;  // stalled at numerical precision
    }
  }
  return beta;
}

MatrixXd weighted_scatter(const Responsibilities& resp, const Dataset& d,
                          const std::vector<VectorXd>& beta) {
  const long n = d.n();
  const int K = static_cast<int>(resp.eta.cols());
  MatrixXd A = MatrixXd::Zero(d.p, d.p);
  for (long i = 0; i < n; ++i) {
    const auto& s = d.subjects[i];
    double wsum = 0.0;
    for (int k = 0; k < K; ++k)
      wsum += resp.eta(i, k) * std::exp(-s.x.dot(beta[k]));
    A += 0.5 * static_cast<double>(s.T) * wsum * s.S;
  }
  return A;
}

double observed_loglik(const Dataset& d, const ModelParams& params) {
  double ll = 0.0;
  for (const auto& s : d.subjects) {
    const VectorXd lpi = log_gating(s.w, params.alpha);
    VectorXd lw(params.K);
    for (int k = 0; k < params.K; ++k)
      lw[k] = lpi[k] + log_expert_density(s, params.gamma, params.beta[k]);
    const double m = lw.maxCoeff();
    ll += m + std::log((lw.array() - m).exp().sum());
  }
  check_finite(ll, "observed_loglik");
  return ll;
}

namespace {

std::vector<int> hard_labels(const MatrixXd& eta) {
  std::vector<int> labels(eta.rows());
  for (long i = 0; i < eta.rows(); ++i) {
    long k = 0;
    eta.row(i).maxCoeff(&k);
    // smallest-index tie break
    for (long j = 0; j < k; ++j)
      if (eta(i, j) == eta(i, k)) {
        k = j;
        break;
      }
    labels[i] = static_cast<int>(k);
  }
  return labels;
}

void normalize_gamma(VectorXd& gamma, const MatrixXd& H) {
  gamma /= std::sqrt(gamma.dot(H * gamma));
  long imax = 0;
  gamma.cwiseAbs().maxCoeff(&imax);
  if (gamma(imax) < 0) gamma = -gamma;
}

}  // namespace

FitResult em_fit(const Dataset& d, int K, const ModelParams& init,
                 const EmConfig& cfg, const MatrixXd& H, bool fix_gamma) {
  ModelParams params = init;
  params.K = K;
  params.alpha[0].setZero();
  if (!fix_gamma) normalize_gamma(params.gamma, H);

  FitResult res;
  double ll_prev = observed_loglik(d, params);
  Responsibilities resp;
  for (int s = 0; s < cfg.max_iter; ++s) {
    resp = e_step(d, params);
    params.alpha = fit_gating(resp, d, cfg);
    params.beta = update_beta_newton(resp, d, params.gamma, params.beta, cfg);
    if (!fix_gamma) {
      const MatrixXd A = weighted_scatter(resp, d, params.beta);
      params.gamma = smallest_generalized_eigen(A, H).gamma;
    }
    const double ll = observed_loglik(d, params);
    res.trace.push_back(ll);
    res.iterations = s + 1;
    if (std::abs(ll - ll_prev) / (1.0 + std::abs(ll)) < cfg.tol) {
      res.converged = true;
      ll_prev = ll;
      break;
    }
    ll_prev = ll;
  }
  res.params = std::move(params);
  res.resp = e_step(d, res.params);
  res.labels = hard_labels(res.resp.eta);
  res.loglik = ll_prev;
  return res;
}

ModelParams random_init(const Dataset& d, int K, const MatrixXd& H, Rng& rng) {
  ModelParams p;
  p.K = K;
  std::normal_distribution<double> normal(0.0, 1.0);
  p.gamma = VectorXd(d.p);
  for (long j = 0; j < d.p; ++j) p.gamma[j] = normal(rng);
  normalize_gamma(p.gamma, H);

  std::uniform_int_distribution<long> pick(0, d.n() - 1);
  for (int k = 0; k < K; ++k) {
    VectorXd b = VectorXd::Zero(d.q1);
    const double q = quad_form(d.subjects[pick(rng)].S, p.gamma);
    b[0] = std::log(std::max(q, 1e-12));
    p.beta.push_back(std::move(b));
    p.alpha.push_back(VectorXd::Zero(d.q2));
  }
  return p;
}

ModelParams spectral_init(const Dataset& d, int K, const MatrixXd& H,
                          Rng& rng) {
  MatrixXd A = MatrixXd::Zero(d.p, d.p);
  for (const auto& s : d.subjects) A += 0.5 * static_cast<double>(s.T) * s.S;
  ModelParams p;
  p.K = K;
  p.gamma = smallest_generalized_eigen(A, H).gamma;
  std::uniform_int_distribution<long> pick(0, d.n() - 1);
  for (int k = 0; k < K; ++k) {
    VectorXd b = VectorXd::Zero(d.q1);
    const double q = quad_form(d.subjects[pick(rng)].S, p.gamma);
    b[0] = std::log(std::max(q, 1e-12));
    p.beta.push_back(std::move(b));
    p.alpha.push_back(VectorXd::Zero(d.q2));
  }
  return p;
}

FitResult fit_with_restarts(const Dataset& d, int K, const EmConfig& cfg,
                            const MatrixXd& H) {
  FitResult best;
  bool have_best = false;
  std::string failures;
  for (int r = 0; r <= cfg.n_restarts; ++r) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(r));
    try {
      const ModelParams init = (r == 0) ? spectral_init(d, K, H, rng)
                                        : random_init(d, K, H, rng);
      FitResult fit = em_fit(d, K, init, cfg, H);
      fit.restart_index = r;
      if (!have_best || fit.loglik > best.loglik) {
        best = std::move(fit);
        have_best = true;
      }
    } catch (const Error& e) {
      failures += std::string(failures.empty() ? "" : "; ") + "restart " +
                  std::to_string(r) + ": " + e.what();
    }
  }
  if (!have_best) throw AllRestartsFailed(failures);
  return best;
}

FitResult fit_with_restarts(const Dataset& d, int K, const EmConfig& cfg) {
  const MatrixXd H = cfg.h_matrix == EmConfig::HMatrix::pooled
                         ? pooled_covariance(d)
                         : MatrixXd::Identity(d.p, d.p).eval();
  return fit_with_restarts(d, K, cfg, H);
}

VectorXd predict_membership(const VectorXd& w_new, const ModelParams& params) {
  if (w_new.size() != params.alpha[0].size())
    throw DimensionMismatch("predict_membership");
  return log_gating(w_new, params.alpha).array().exp();
}

}  // namespace capclust
