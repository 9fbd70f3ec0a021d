#include "capclust/selection.hpp"

#include <cmath>
#include <limits>

namespace capclust {

double bic(const FitResult& fit, const Dataset& d) {
  const double K = static_cast<double>(fit.params.K);
  const double M = K * static_cast<double>(d.q1) +
                   (K - 1.0) * static_cast<double>(d.q2) +
                   static_cast<double>(d.p);
  double total_T = 0.0;
  for (const auto& s : d.subjects) total_T += static_cast<double>(s.T);
  return M * std::log(total_T) - 2.0 * fit.loglik;
}

BicReport select_num_clusters(const Dataset& d, int k_min, int k_max,
                              const EmConfig& cfg) {
  if (k_min < 1 || k_max < k_min || k_max > d.n())
    throw ConfigError("invalid K range");
  BicReport report;
  double best = std::numeric_limits<double>::infinity();
  for (int K = k_min; K <= k_max; ++K) {
    ComponentSet cs;
    try {
      cs = extract_components(d, K, cfg.max_components, cfg);
    } catch (const Error& e) {
      report.warnings.push_back("K=" + std::to_string(K) + ": " + e.what());
      continue;
    }
    std::vector<std::pair<int, double>> rows;
    double sum = 0.0;
    for (size_t j = 0; j < cs.fits.size(); ++j) {
      if (!cs.accepted[j]) continue;
      const double b = bic(cs.fits[j], d);
      rows.emplace_back(static_cast<int>(j) + 1, b);
      sum += b;
    }
    if (rows.empty()) {
      report.warnings.push_back("K=" + std::to_string(K) +
                                ": no accepted components");
      continue;
    }
    const double avg = sum / static_cast<double>(rows.size());
    report.per_component[K] = std::move(rows);
    report.average[K] = avg;
    if (avg < best) {  // ties break toward the smaller (earlier) K
      best = avg;
      report.chosen_K = K;
    }
  }
  if (report.chosen_K == 0)
    throw AllRestartsFailed("no candidate K produced accepted components");
  return report;
}

}  // namespace capclust
