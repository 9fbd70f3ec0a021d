#pragma once

#include <map>
#include <string>
#include <vector>

#include "capclust/components.hpp"

namespace capclust {

struct BicReport {
  // per candidate K: the (component index, BIC) pairs of accepted components
  std::map<int, std::vector<std::pair<int, double>>> per_component;
  std::map<int, double> average;
  int chosen_K = 0;
  std::vector<std::string> warnings;
};

// M log(sum T_i) - 2 loglik with M = K q1 + (K-1) q2 + p.
double bic(const FitResult& fit, const Dataset& d);

// Reruns component extraction for each candidate K and picks the K with
// the smallest average BIC over accepted components (ties: smaller K).
BicReport select_num_clusters(const Dataset& d, int k_min, int k_max,
                              const EmConfig& cfg);

}  // namespace capclust
