#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "capclust/components.hpp"
#include "capclust/metrics.hpp"
#include "capclust/simgen.hpp"

namespace capclust {

// Per-replication scores of the study harness. Clustering metrics are
// stored as {jaccard, ari, error} per structured dimension and method.
struct RepScore {
  std::map<int, double> similarity;  // dim -> best |<gamma_j, pi_dim>|
  std::map<int, int> matched_component;
  std::map<int, std::vector<VectorXd>> beta_hat;  // of the matched component
  std::map<int, std::map<std::string, std::array<double, 3>>> clustering;
  bool ok = true;
  std::string error;
};

extern const std::vector<std::string> kAllMethods;

// One replication: generate with (cfg.seed, rep) -> fit CAPclust and the
// requested baselines -> score against the ground truth.
RepScore run_replication(const SimConfig& sim_cfg, const EmConfig& em_cfg,
                         std::uint64_t rep, const std::vector<std::string>& methods);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  long count = 0;
};

MeanSE mean_se(const std::vector<double>& v);

}  // namespace capclust
