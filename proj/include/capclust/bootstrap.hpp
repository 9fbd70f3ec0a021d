#pragma once

#include <string>
#include <vector>

#include "capclust/components.hpp"

namespace capclust {

// Linear combination c' beta_k reported per cluster (e.g. group contrasts).
struct ContrastSpec {
  std::string name;
  VectorXd coeffs;  // length q1
};

struct CoefficientCI {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapComponent {
  std::vector<std::vector<CoefficientCI>> beta;       // K x q1
  std::vector<std::vector<CoefficientCI>> alpha;      // K x q2
  std::vector<std::vector<CoefficientCI>> contrasts;  // K x n_contrasts
  int successes = 0;
};

struct BootstrapReport {
  int B = 0;
  double level = 0.05;  // significance level; CIs at (level/2, 1-level/2)
  std::vector<BootstrapComponent> components;  // accepted components only
  std::vector<ContrastSpec> contrast_specs;
};

// Type-7 (linear interpolation) sample quantile of v at probability prob.
double quantile_type7(std::vector<double> v, double prob);

Dataset resample(const Dataset& d, const std::vector<long>& indices);

// Replicate-level refit: EM with the projection held fixed, warm-started
// at the full-data estimates.
FitResult refit_fixed_gamma(const Dataset& d, const VectorXd& gamma,
                            const ModelParams& init, const EmConfig& cfg);

// Nonparametric bootstrap for the coefficients of the accepted components,
// with replicate clusters aligned to the full-data fit by coefficient
// distance and alpha re-referenced to the aligned first cluster.
BootstrapReport bootstrap_inference(const Dataset& d, const ComponentSet& cs,
                                    int B, double level, std::uint64_t seed,
                                    const EmConfig& cfg,
                                    const std::vector<ContrastSpec>& contrasts = {},
                                    int restarts_per_replicate = 0);

// Permutation sigma minimizing sum_j ||candidate[sigma(j)] - reference[j]||^2.
std::vector<int> align_by_coefficients(const std::vector<VectorXd>& candidate,
                                       const std::vector<VectorXd>& reference);

}  // namespace capclust
