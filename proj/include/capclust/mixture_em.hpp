#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "capclust/dataset.hpp"
#include "capclust/rng.hpp"

namespace capclust {

// gamma: shared projection; beta[k]: log-variance coefficients; alpha[k]:
// gating coefficients with alpha[0] pinned to zero for identification.
struct ModelParams {
  VectorXd gamma;
  std::vector<VectorXd> beta;
  std::vector<VectorXd> alpha;
  int K = 1;
};

struct Responsibilities {
  MatrixXd eta;  // n x K, rows sum to 1
};

struct EmConfig {
  double tol = 1e-6;
  int max_iter = 500;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  enum class HMatrix { pooled, identity } h_matrix = HMatrix::pooled;
  int newton_max_iter = 50;
  int gating_max_iter = 100;
  double ridge = 1e-8;
  double dfd_threshold = 2.0;
  int max_components = 1;
  int threads = 1;
};

struct FitResult {
  ModelParams params;
  Responsibilities resp;
  std::vector<int> labels;  // argmax of eta rows, smallest index on ties
  double loglik = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  int restart_index = -1;
};

// log of prod_t N(gamma' y_t; 0, exp(x'beta_k)) via the sufficient
// statistic gamma' S gamma:
//   -(T/2) [log 2pi + x'beta + exp(-x'beta) gamma' S gamma]
double log_expert_density(const SubjectRecord& subject, const VectorXd& gamma,
                          const VectorXd& beta_k);

// Gating log-probabilities log pi_k(w), k = 1..K.
VectorXd log_gating(const VectorXd& w, const std::vector<VectorXd>& alpha);

Responsibilities e_step(const Dataset& d, const ModelParams& params);

// {alpha_k} maximizing sum_i sum_k T_i eta_ik log pi_k(w_i), alpha_1 = 0.
// Damped Newton with ridge on the Hessian.
std::vector<VectorXd> fit_gating(const Responsibilities& resp, const Dataset& d,
                                 const EmConfig& cfg = {});

// Per-cluster Newton-Raphson on the weighted variance-model objective
//   sum_i (T_i/2) eta_ik { x'beta + exp(-x'beta) gamma' S_i gamma }
// with step halving.
std::vector<VectorXd> update_beta_newton(const Responsibilities& resp,
                                         const Dataset& d,
                                         const VectorXd& gamma,
                                         const std::vector<VectorXd>& beta_init,
                                         const EmConfig& cfg = {});

// A = sum_i sum_k (T_i/2) eta_ik exp(-x_i'beta_k) S_i for the gamma step.
MatrixXd weighted_scatter(const Responsibilities& resp, const Dataset& d,
                          const std::vector<VectorXd>& beta);

double observed_loglik(const Dataset& d, const ModelParams& params);

// One EM run (Algorithm steps: responsibilities, gating, variance
// coefficients, projection) with H fixed for the whole run. When
// `fix_gamma` is set the projection step is skipped and init.gamma kept.
FitResult em_fit(const Dataset& d, int K, const ModelParams& init,
                 const EmConfig& cfg, const MatrixXd& H,
                 bool fix_gamma = false);

ModelParams random_init(const Dataset& d, int K, const MatrixXd& H, Rng& rng);
ModelParams spectral_init(const Dataset& d, int K, const MatrixXd& H, Rng& rng);

// Best of cfg.n_restarts random initializations plus one spectral
// initialization, by observed log-likelihood (ties: lower restart index;
// spectral run has index 0).
FitResult fit_with_restarts(const Dataset& d, int K, const EmConfig& cfg,
                            const MatrixXd& H);
FitResult fit_with_restarts(const Dataset& d, int K, const EmConfig& cfg);

VectorXd predict_membership(const VectorXd& w_new, const ModelParams& params);

}  // namespace capclust
