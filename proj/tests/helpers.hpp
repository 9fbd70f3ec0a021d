#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>

#include "capclust/dataset.hpp"
#include "capclust/rng.hpp"

namespace testutil {

using capclust::Dataset;
using capclust::MatrixXd;
using capclust::Rng;
using capclust::SubjectRecord;
using capclust::VectorXd;

inline MatrixXd random_matrix(long r, long c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

inline VectorXd random_vector(long n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline MatrixXd random_spd(long p, Rng& rng) {
  const MatrixXd G = random_matrix(p, p, rng);
  return G * G.transpose() + 0.5 * MatrixXd::Identity(p, p);
}

inline SubjectRecord subject_from_Y(const std::string& id, const MatrixXd& Y,
                                    const VectorXd& x, const VectorXd& w) {
  SubjectRecord s;
  s.id = id;
  s.Y = Y;
  s.T = Y.rows();
  s.S = capclust::sample_covariance(Y);
  s.x = x;
  s.w = w;
  return s;
}

// Random dataset with x = (1, N(0,1), ...) and w = (1, Bernoulli, ...).
inline Dataset random_dataset(long n, long p, long T, long q1, long q2,
                              std::uint64_t seed) {
  Rng rng = capclust::make_rng(seed, 7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset d;
  d.p = p;
  d.q1 = q1;
  d.q2 = q2;
  for (long i = 0; i < n; ++i) {
    VectorXd x = VectorXd::Ones(q1);
    for (long j = 1; j < q1; ++j) x[j] = normal(rng);
    VectorXd w = VectorXd::Ones(q2);
    for (long j = 1; j < q2; ++j) w[j] = unif(rng) < 0.5 ? 1.0 : 0.0;
    char id[16];
    std::snprintf(id, sizeof(id), "r%04ld", i);
    d.subjects.push_back(subject_from_Y(id, random_matrix(T, p, rng), x, w));
  }
  return d;
}

}  // namespace testutil
