#include "capclust/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace capclust {

VectorXd fisher_z_lower_tri(const MatrixXd& S) {
  const long p = S.rows();
  for (long j = 0; j < p; ++j)
    if (S(j, j) <= 0.0) throw ZeroVariance("diagonal entry " + std::to_string(j));
  VectorXd out(p * (p - 1) / 2);
  long idx = 0;
  for (long c = 0; c < p; ++c)
    for (long r = c + 1; r < p; ++r) {
      double rho = S(r, c) / std::sqrt(S(r, r) * S(c, c));
      rho = std::clamp(rho, -(1.0 - 1e-12), 1.0 - 1e-12);
      out[idx++] = std::atanh(rho);
    }
  return out;
}

double log_projected_variance(const MatrixXd& S, const VectorXd& gamma) {
  const double q = gamma.dot(S * gamma);
  if (q <= 0.0) throw ZeroVariance("nonpositive projected variance");
  return std::log(q);
}

namespace {

double wcss(const MatrixXd& F, const std::vector<int>& labels,
            const MatrixXd& centers) {
  double s = 0.0;
  for (long i = 0; i < F.rows(); ++i)
    s += (F.row(i) - centers.row(labels[i])).squaredNorm();
  return s;
}

std::vector<int> lloyd(const MatrixXd& F, int K, Rng& rng, double* out_wcss) {
  const long n = F.rows();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // k-means++ seeding
  MatrixXd centers(K, F.cols());
  std::uniform_int_distribution<long> pick(0, n - 1);
  centers.row(0) = F.row(pick(rng));
  VectorXd d2 = (F.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    long chosen = 0;
    if (total > 0.0) {
      double u = unif(rng) * total;
      double acc = 0.0;
      for (long i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= u) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(k) = F.row(chosen);
    d2 = d2.cwiseMin((F.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }

  std::vector<int> labels(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (long i = 0; i < n; ++i) {
      int bestk = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        const double dd = (F.row(i) - centers.row(k)).squaredNorm();
        if (dd < bestd) {
          bestd = dd;
          bestk = k;
        }
      }
      if (labels[i] != bestk) {
        labels[i] = bestk;
        changed = true;
      }
    }
    MatrixXd sums = MatrixXd::Zero(K, F.cols());
    std::vector<long> counts(K, 0);
    for (long i = 0; i < n; ++i) {
      sums.row(labels[i]) += F.row(i);
      ++counts[labels[i]];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[k] == 0) {
        // reseed from the farthest point
        long far = 0;
        double fd = -1.0;
        for (long i = 0; i < n; ++i) {
          const double dd = (F.row(i) - centers.row(labels[i])).squaredNorm();
          if (dd > fd) {
            fd = dd;
            far = i;
          }
        }
        centers.row(k) = F.row(far);
        changed = true;
      } else {
        centers.row(k) = sums.row(k) / static_cast<double>(counts[k]);
      }
    }
    if (!changed && iter > 0) break;
  }
  *out_wcss = wcss(F, labels, centers);
  return labels;
}

}  // namespace

std::vector<int> kmeans(const MatrixXd& F, int K, std::uint64_t seed,
                        int n_init) {
  if (F.rows() < K) throw DimensionMismatch("n < K");
  std::vector<int> best_labels;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n_init; ++r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    double w = 0.0;
    std::vector<int> labels = lloyd(F, K, rng, &w);
    if (w < best) {
      best = w;
      best_labels = std::move(labels);
    }
  }
  return best_labels;
}

std::vector<int> hierarchical(const MatrixXd& F, int K) {
  const long n = F.rows();
  if (n < K) throw DimensionMismatch("n < K");

  // Ward distances; Lance-Williams recurrence on squared Euclidean / 2.
  std::vector<bool> active(n, true);
  std::vector<long> size(n, 1);
  std::vector<std::vector<long>> members(n);
  for (long i = 0; i < n; ++i) members[i] = {i};
  MatrixXd D(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      D(i, j) = 0.5 * (F.row(i) - F.row(j)).squaredNorm();

  long clusters = n;
  while (clusters > K) {
    long bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (long j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (D(i, j) < best) {
          best = D(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    // merge bj into bi
    const double si = static_cast<double>(size[bi]);
    const double sj = static_cast<double>(size[bj]);
    for (long k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double sk = static_cast<double>(size[k]);
      D(bi, k) = D(k, bi) =
          ((si + sk) * D(bi, k) + (sj + sk) * D(bj, k) - sk * D(bi, bj)) /
          (si + sj + sk);
    }
    size[bi] += size[bj];
    members[bi].insert(members[bi].end(), members[bj].begin(),
                       members[bj].end());
    active[bj] = false;
    --clusters;
  }

  std::vector<int> labels(n, -1);
  int next = 0;
  for (long i = 0; i < n; ++i) {
    if (!active[i]) continue;
    for (long m : members[i]) labels[m] = next;
    ++next;
  }
  return labels;
}

}  // namespace capclust
