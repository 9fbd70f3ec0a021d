#pragma once

#include <vector>

#include "capclust/mixture_em.hpp"
#include "capclust/simgen.hpp"

namespace capclust {

// |<a/||a||, b/||b||>|; both arguments Euclidean-normalized first.
double projection_similarity(const VectorXd& g_hat, const VectorXd& pi_true);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Pair-based Jaccard: together-in-both / together-in-at-least-one.
double jaccard_index(const std::vector<int>& a, const std::vector<int>& b);

// Minimum mismatch fraction over label permutations (K <= 8).
double classification_error(const std::vector<int>& a,
                            const std::vector<int>& truth);

struct CoefficientScore {
  std::vector<VectorXd> bias;  // per cluster, entrywise mean of beta_hat - beta
  std::vector<VectorXd> mse;   // per cluster, entrywise mean squared error
  VectorXd bias_scalar;        // per cluster, averaged over entries
  VectorXd mse_scalar;
  int replicates = 0;
};

// Bias/MSE of the expert coefficients across replicate fits, clusters
// aligned to the truth by coefficient distance.
CoefficientScore coefficient_bias_mse(
    const std::vector<std::vector<VectorXd>>& beta_hats,
    const std::vector<VectorXd>& beta_true);

}  // namespace capclust
