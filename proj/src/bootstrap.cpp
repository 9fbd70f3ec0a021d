#include "capclust/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace capclust {

double quantile_type7(std::vector<double> v, double prob) {
  if (v.empty()) throw DimensionMismatch("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Dataset resample(const Dataset& d, const std::vector<long>& indices) {
  Dataset out;
  out.p = d.p;
  out.q1 = d.q1;
  out.q2 = d.q2;
  for (long idx : indices) out.subjects.push_back(d.subjects[idx]);
  return out;
}

FitResult refit_fixed_gamma(const Dataset& d, const VectorXd& gamma,
                            const ModelParams& init, const EmConfig& cfg) {
  ModelParams warm = init;
  warm.gamma = gamma;
  const MatrixXd I = MatrixXd::Identity(d.p, d.p);
  return em_fit(d, warm.K, warm, cfg, I, /*fix_gamma=*/true);
}

std::vector<int> align_by_coefficients(const std::vector<VectorXd>& candidate,
                                       const std::vector<VectorXd>& reference) {
  const int K = static_cast<int>(reference.size());
  if (K > 8) throw PermutationLimit("K > 8");
  std::vector<int> perm(K), best(K);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int j = 0; j < K; ++j)
      cost += (candidate[perm[j]] - reference[j]).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

BootstrapReport bootstrap_inference(const Dataset& d, const ComponentSet& cs,
                                    int B, double level, std::uint64_t seed,
                                    const EmConfig& cfg,
                                    const std::vector<ContrastSpec>& contrasts,
                                    int restarts_per_replicate) {
  if (B < 2) throw ConfigError("bootstrap needs B >= 2");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");

  BootstrapReport report;
  report.B = B;
  report.level = level;
  report.contrast_specs = contrasts;

  std::vector<int> comp_idx;
  for (size_t j = 0; j < cs.gammas.size(); ++j)
    if (cs.accepted[j]) comp_idx.push_back(static_cast<int>(j));

  const long n = d.n();
  // draws[j][k][coef][b]
  struct Samples {
    std::vector<std::vector<std::vector<double>>> beta, alpha, contr;
    int successes = 0;
  };
  std::vector<Samples> samples(comp_idx.size());
  const int K = comp_idx.empty() ? 0 : cs.fits[comp_idx[0]].params.K;
  for (auto& s : samples) {
    s.beta.assign(K, std::vector<std::vector<double>>(d.q1));
    s.alpha.assign(K, std::vector<std::vector<double>>(d.q2));
    s.contr.assign(K, std::vector<std::vector<double>>(contrasts.size()));
  }

  for (int b = 0; b < B; ++b) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b) + 1);
    std::uniform_int_distribution<long> pick(0, n - 1);
    std::vector<long> idx(n);
    for (long i = 0; i < n; ++i) idx[i] = pick(rng);
    const Dataset star = resample(d, idx);

    for (size_t jj = 0; jj < comp_idx.size(); ++jj) {
      const int j = comp_idx[jj];
      const FitResult& full = cs.fits[j];
      FitResult rep;
      try {
        EmConfig rcfg = cfg;
        rep = refit_fixed_gamma(star, cs.gammas[j], full.params, rcfg);
        for (int r = 0; r < restarts_per_replicate; ++r) {
          ModelParams init = full.params;
          std::normal_distribution<double> jitter(0.0, 0.5);
          for (auto& bk : init.beta)
            for (long c = 0; c < bk.size(); ++c) bk[c] += jitter(rng);
          FitResult alt = refit_fixed_gamma(star, cs.gammas[j], init, rcfg);
          if (alt.loglik > rep.loglik) rep = std::move(alt);
        }
      } catch (const Error&) {
        continue;  // failed replicate excluded
      }
      const std::vector<int> perm =
          align_by_coefficients(rep.params.beta, full.params.beta);
      // Re-reference alpha to the aligned cluster 1.
      const VectorXd a0 = rep.params.alpha[perm[0]];
      ++samples[jj].successes;
      for (int k = 0; k < K; ++k) {
        const VectorXd& bk = rep.params.beta[perm[k]];
        const VectorXd ak = rep.params.alpha[perm[k]] - a0;
        for (long c = 0; c < d.q1; ++c) samples[jj].beta[k][c].push_back(bk[c]);
        for (long c = 0; c < d.q2; ++c)
          samples[jj].alpha[k][c].push_back(ak[c]);
        for (size_t c = 0; c < contrasts.size(); ++c)
          samples[jj].contr[k][c].push_back(contrasts[c].coeffs.dot(bk));
      }
    }
  }

  for (size_t jj = 0; jj < comp_idx.size(); ++jj) {
    const auto& s = samples[jj];
    if (s.successes * 2 < B)
      throw BootstrapUnstable("component " + std::to_string(comp_idx[jj] + 1) +
                              ": " + std::to_string(s.successes) + "/" +
                              std::to_string(B) + " replicates succeeded");
    const FitResult& full = cs.fits[comp_idx[jj]];
    BootstrapComponent bc;
    bc.successes = s.successes;
    const double plo = level / 2.0, phi = 1.0 - level / 2.0;
    auto make_ci = [&](const std::vector<double>& draws, double est) {
      CoefficientCI ci;
      ci.estimate = est;
      ci.lower = quantile_type7(draws, plo);
      ci.upper = quantile_type7(draws, phi);
      return ci;
    };
    bc.beta.resize(K);
    bc.alpha.resize(K);
    bc.contrasts.resize(K);
    for (int k = 0; k < K; ++k) {
      for (long c = 0; c < d.q1; ++c)
        bc.beta[k].push_back(make_ci(s.beta[k][c], full.params.beta[k][c]));
      for (long c = 0; c < d.q2; ++c)
        bc.alpha[k].push_back(make_ci(s.alpha[k][c], full.params.alpha[k][c]));
      for (size_t c = 0; c < report.contrast_specs.size(); ++c)
        bc.contrasts[k].push_back(make_ci(
            s.contr[k][c],
            report.contrast_specs[c].coeffs.dot(full.params.beta[k])));
    }
    report.components.push_back(std::move(bc));
  }
  return report;
}

}  // namespace capclust
