#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capclust/mixture_em.hpp"

namespace capclust {

// Sequentially extracted projections, in original coordinates.
struct ComponentSet {
  std::vector<VectorXd> gammas;
  std::vector<FitResult> fits;
  std::vector<double> dfd_trace;
  std::vector<bool> accepted;     // dfd within threshold
  std::optional<std::string> error;  // extraction stopped early
};

struct DeflateResult {
  Dataset reduced;  // observations Y Q, covariances Q' S Q
  MatrixXd Q;       // p x (p - r), orthonormal complement basis of span(Gamma)
};

// Orthogonal-complement reduction realizing Y_i - Y_i Gamma Gamma'.
DeflateResult deflate(const Dataset& d, const std::vector<VectorXd>& Gamma);

// Geometric-mean determinant ratio of projected covariances (log-domain).
double dfd(const std::vector<VectorXd>& Gamma, const Dataset& d);

// Fit, deflate, repeat until r_max or the threshold is exceeded; the first
// violating component is retained but marked rejected.
ComponentSet extract_components(const Dataset& d, int K, int r_max,
                                const EmConfig& cfg);

// Largest r with dfd_trace[r-1] <= threshold.
int select_num_components(const ComponentSet& cs, double threshold = 2.0);

}  // namespace capclust
