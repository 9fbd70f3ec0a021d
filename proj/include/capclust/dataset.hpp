#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "capclust/errors.hpp"

namespace capclust {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One subject: T x p observation matrix Y (may be absent when the dataset
// was loaded from precomputed covariances), covariates x (expert model,
// intercept first) and w (gating model, intercept first), and the sample
// covariance S = Y'Y / T.
struct SubjectRecord {
  std::string id;
  MatrixXd Y;       // T x p; 0x0 when only S is available
  VectorXd x;       // length q1
  VectorXd w;       // length q2
  MatrixXd S;       // p x p
  long T = 0;

  bool has_raw() const { return Y.size() > 0; }
};

struct Dataset {
  std::vector<SubjectRecord> subjects;
  long p = 0, q1 = 0, q2 = 0;

  long n() const { return static_cast<long>(subjects.size()); }
  bool has_raw() const;
  void require_raw(const char* op) const;
};

// S = Y'Y / T (divisor T, the likelihood's sufficient statistic).
MatrixXd sample_covariance(const MatrixXd& Y);

// NDJSON time series {"id","Y"} + CSV covariates `id,x1,...,w1,...`.
// Intercepts are prepended; subjects ordered by id.
Dataset load_dataset(const std::string& timeseries_path,
                     const std::string& covariates_path);

// NDJSON {"id","T","S"} + the same covariates CSV. No raw Y.
Dataset load_dataset_cov(const std::string& cov_matrix_path,
                         const std::string& covariates_path);

void save_timeseries(const Dataset& d, const std::string& path);
void save_covariates(const Dataset& d, const std::string& path);

// Column-center each subject's Y (and rescale columns to unit sample
// variance when requested); S is recomputed. Requires T >= 2 and raw Y.
Dataset center_scale(const Dataset& d, bool unit_variance);

// H = sum_i T_i S_i / sum_i T_i. Throws SingularPooled when the smallest
// eigenvalue is <= 1e-10 * trace/p.
MatrixXd pooled_covariance(const Dataset& d);

}  // namespace capclust
