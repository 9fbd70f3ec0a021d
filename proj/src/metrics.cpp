#include "capclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "capclust/bootstrap.hpp"

namespace capclust {

double projection_similarity(const VectorXd& g_hat, const VectorXd& pi_true) {
  const double na = g_hat.norm(), nb = pi_true.norm();
  if (na == 0.0 || nb == 0.0)
    throw DimensionMismatch("projection_similarity of zero vector");
  return std::abs(g_hat.dot(pi_true)) / (na * nb);
}

namespace {

long pairs2(long m) { return m * (m - 1) / 2; }

struct PairCounts {
  long n11 = 0;  // together in both
  long a_pairs = 0, b_pairs = 0;
  long total = 0;
};

PairCounts count_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("label length mismatch");
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> ca, cb;
  for (size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ca[a[i]];
    ++cb[b[i]];
  }
  PairCounts pc;
  for (auto& [k, v] : joint) pc.n11 += pairs2(v);
  for (auto& [k, v] : ca) pc.a_pairs += pairs2(v);
  for (auto& [k, v] : cb) pc.b_pairs += pairs2(v);
  pc.total = pairs2(static_cast<long>(a.size()));
  return pc;
}

}  // namespace

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() < 2) throw DimensionMismatch("need at least 2 labels");
  const PairCounts pc = count_pairs(a, b);
  const double exp_index = static_cast<double>(pc.a_pairs) *
                           static_cast<double>(pc.b_pairs) /
                           static_cast<double>(pc.total);
  const double max_index = 0.5 * (pc.a_pairs + pc.b_pairs);
  if (max_index == exp_index) return 1.0;  // both partitions trivial
  return (static_cast<double>(pc.n11) - exp_index) / (max_index - exp_index);
}

double jaccard_index(const std::vector<int>& a, const std::vector<int>& b) {
  const PairCounts pc = count_pairs(a, b);
  const long uni = pc.a_pairs + pc.b_pairs - pc.n11;
  if (uni == 0) return 1.0;  // both all-singletons
  return static_cast<double>(pc.n11) / static_cast<double>(uni);
}

double classification_error(const std::vector<int>& a,
                            const std::vector<int>& truth) {
  if (a.size() != truth.size()) throw DimensionMismatch("label length mismatch");
  std::vector<int> labels;
  for (int v : a) labels.push_back(v);
  for (int v : truth) labels.push_back(v);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const int K = static_cast<int>(labels.size());
  if (K > 8) throw PermutationLimit("more than 8 distinct labels");
  std::map<int, int> remap;
  for (int j = 0; j < K; ++j) remap[labels[j]] = j;

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  long best = static_cast<long>(a.size()) + 1;
  do {
    long mism = 0;
    for (size_t i = 0; i < a.size(); ++i)
      if (perm[remap[a[i]]] != remap[truth[i]]) ++mism;
    best = std::min(best, mism);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(a.size());
}

CoefficientScore coefficient_bias_mse(
    const std::vector<std::vector<VectorXd>>& beta_hats,
    const std::vector<VectorXd>& beta_true) {
  const int K = static_cast<int>(beta_true.size());
  const long q1 = beta_true[0].size();
  CoefficientScore score;
  score.bias.assign(K, VectorXd::Zero(q1));
  score.mse.assign(K, VectorXd::Zero(q1));
  for (const auto& bh : beta_hats) {
    const std::vector<int> perm = align_by_coefficients(bh, beta_true);
    for (int k = 0; k < K; ++k) {
      const VectorXd diff = bh[perm[k]] - beta_true[k];
      score.bias[k] += diff;
      score.mse[k] += diff.cwiseProduct(diff);
    }
    ++score.replicates;
  }
  if (score.replicates == 0) throw DimensionMismatch("no replicate fits");
  score.bias_scalar = VectorXd(K);
  score.mse_scalar = VectorXd(K);
  for (int k = 0; k < K; ++k) {
    score.bias[k] /= static_cast<double>(score.replicates);
    score.mse[k] /= static_cast<double>(score.replicates);
    score.bias_scalar[k] = score.bias[k].mean();
    score.mse_scalar[k] = score.mse[k].mean();
  }
  return score;
}

}  // namespace capclust
