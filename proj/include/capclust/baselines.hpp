#pragma once

#include <vector>

#include "capclust/dataset.hpp"
#include "capclust/rng.hpp"

namespace capclust {

// Strictly-lower-triangular correlations (column-major) after atanh,
// with |r| clamped at 1 - 1e-12.
VectorXd fisher_z_lower_tri(const MatrixXd& S);

double log_projected_variance(const MatrixXd& S, const VectorXd& gamma);

// Lloyd's algorithm with k-means++ seeding, best of n_init by WCSS.
std::vector<int> kmeans(const MatrixXd& F, int K, std::uint64_t seed,
                        int n_init = 10);

// Agglomerative clustering with Ward linkage (Lance-Williams update) cut
// at K clusters.
std::vector<int> hierarchical(const MatrixXd& F, int K);

}  // namespace capclust
