#pragma once

#include <map>
#include <vector>

#include "capclust/dataset.hpp"
#include "capclust/rng.hpp"

namespace capclust {

// Synthetic-study configuration: a common (or partially common)
// eigenstructure, covariate-driven eigenvalues on the structured
// dimensions, and near-constant log-eigenvalues elsewhere.
struct SimConfig {
  long p = 50, n = 100, T = 100;
  int K = 2;
  std::vector<int> structured_dims = {2, 4};          // 1-based
  std::map<int, VectorXd> alpha_true;                 // dim -> length q2 - 1? no: q2 incl intercept; alpha_2 only (K=2)
  std::map<int, std::vector<VectorXd>> beta_true;     // dim -> K vectors length q1
  double eigen_mean_high = 3.0, eigen_mean_low = -1.0;
  double eigen_sd = 0.2;
  enum class Misspec { none, variance_interaction, both_interactions };
  Misspec misspec = Misspec::none;
  double interaction_coef = 0.5;
  int shared_eigenvectors = -1;  // -1: fully common; else partial common
  enum class Noise { gaussian, student_t };
  Noise noise = Noise::gaussian;
  double t_df = 5.0;
  std::uint64_t seed = 0;
};

// Defaults matching the reference study design: K=2, q1=3, q2=2,
// alpha_2 = (0.5,-1) on D2 and (-0.25,0.5) on D4, beta as published.
SimConfig default_sim_config();

struct SimGroundTruth {
  MatrixXd Pi;  // p x p master eigenvector matrix (only the first
                // `shared_eigenvectors` columns are common when partial)
  std::map<int, std::vector<int>> memberships;  // dim -> n labels in [0, K)
  std::map<int, std::vector<VectorXd>> beta_true;
  std::map<int, VectorXd> alpha_true;
  std::vector<int> structured_dims;
};

// Haar-distributed orthonormal matrix (QR with sign-fixed R diagonal).
MatrixXd random_orthonormal(long p, Rng& rng);

std::pair<Dataset, SimGroundTruth> generate_dataset(const SimConfig& cfg);

}  // namespace capclust
