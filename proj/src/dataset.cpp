#include "capclust/dataset.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace capclust {

using nlohmann::json;

bool Dataset::has_raw() const {
  for (const auto& s : subjects)
    if (!s.has_raw()) return false;
  return !subjects.empty();
}

void Dataset::require_raw(const char* op) const {
  if (!has_raw())
    throw RawDataRequired(std::string(op) + " needs raw observation matrices");
}

MatrixXd sample_covariance(const MatrixXd& Y) {
  const double T = static_cast<double>(Y.rows());
  return (Y.transpose() * Y) / T;
}

namespace {

struct CovRow {
  VectorXd x, w;
};

// Header: id,x1,...,x{q1-1},w1,...,w{q2-1}; intercepts prepended here.
std::map<std::string, CovRow> read_covariates(const std::string& path,
                                              long* q1_out, long* q2_out) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open covariates file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty covariates file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.empty() || cols[0] != "id")
    throw ParseError("covariates header must start with 'id'");
  long nx = 0, nw = 0;
  for (size_t j = 1; j < cols.size(); ++j) {
    if (cols[j].rfind('x', 0) == 0)
      ++nx;
    else if (cols[j].rfind('w', 0) == 0)
      ++nw;
    else
      throw ParseError("unexpected covariate column name: " + cols[j]);
  }
  *q1_out = nx + 1;
  *q2_out = nw + 1;

  std::map<std::string, CovRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() != cols.size())
      throw ParseError("covariates row " + std::to_string(lineno) +
                       " has wrong cell count");
    CovRow r;
    r.x = VectorXd(nx + 1);
    r.w = VectorXd(nw + 1);
    r.x[0] = 1.0;
    r.w[0] = 1.0;
    long ix = 1, iw = 1;
    for (size_t j = 1; j < cols.size(); ++j) {
      double v;
      try {
        size_t pos = 0;
        v = std::stod(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("non-numeric cell '" + cells[j] + "' at row " +
                         std::to_string(lineno));
      }
      if (cols[j][0] == 'x')
        r.x[ix++] = v;
      else
        r.w[iw++] = v;
    }
    if (rows.count(cells[0]))
      throw DuplicateId("covariates id " + cells[0]);
    rows.emplace(cells[0], std::move(r));
  }
  return rows;
}

MatrixXd json_to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError(what + " is not a 2-d array");
  const long rows = static_cast<long>(j.size());
  const long cols = static_cast<long>(j[0].size());
  MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (static_cast<long>(j[r].size()) != cols)
      throw ParseError(what + " has ragged rows");
    for (long c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ParseError(what + " has a non-numeric cell");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Dataset assemble(std::vector<SubjectRecord>&& subjects,
                 std::map<std::string, CovRow>&& covs, long q1, long q2) {
  std::sort(subjects.begin(), subjects.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) {
              return a.id < b.id;
            });
  for (size_t i = 1; i < subjects.size(); ++i)
    if (subjects[i].id == subjects[i - 1].id)
      throw DuplicateId(subjects[i].id);

  Dataset d;
  d.q1 = q1;
  d.q2 = q2;
  for (auto& s : subjects) {
    auto it = covs.find(s.id);
    if (it == covs.end()) throw MissingCovariates(s.id);
    s.x = it->second.x;
    s.w = it->second.w;
    if (d.p == 0) d.p = s.S.rows();
    if (s.S.rows() != d.p || s.S.cols() != d.p)
      throw DimensionMismatch("subject " + s.id + " has p=" +
                              std::to_string(s.S.rows()));
    d.subjects.push_back(std::move(s));
  }
  if (d.subjects.empty()) throw ParseError("no subjects");
  return d;
}

}  // namespace

Dataset load_dataset(const std::string& timeseries_path,
                     const std::string& covariates_path) {
  long q1 = 0, q2 = 0;
  auto covs = read_covariates(covariates_path, &q1, &q2);

  std::ifstream in(timeseries_path);
  if (!in) throw ParseError("cannot open time-series file: " + timeseries_path);
  std::vector<SubjectRecord> subjects;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("bad NDJSON line");
    SubjectRecord s;
    s.id = j.at("id").get<std::string>();
    s.Y = json_to_matrix(j.at("Y"), "Y of " + s.id);
    s.T = s.Y.rows();
    s.S = sample_covariance(s.Y);
    subjects.push_back(std::move(s));
  }
  return assemble(std::move(subjects), std::move(covs), q1, q2);
}

Dataset load_dataset_cov(const std::string& cov_matrix_path,
                         const std::string& covariates_path) {
  long q1 = 0, q2 = 0;
  auto covs = read_covariates(covariates_path, &q1, &q2);

  std::ifstream in(cov_matrix_path);
  if (!in) throw ParseError("cannot open covariance file: " + cov_matrix_path);
  std::vector<SubjectRecord> subjects;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("bad NDJSON line");
    SubjectRecord s;
    s.id = j.at("id").get<std::string>();
    s.T = j.at("T").get<long>();
    s.S = json_to_matrix(j.at("S"), "S of " + s.id);
    if ((s.S - s.S.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ParseError("S of " + s.id + " is not symmetric");
    subjects.push_back(std::move(s));
  }
  return assemble(std::move(subjects), std::move(covs), q1, q2);
}

Dataset center_scale(const Dataset& d, bool unit_variance) {
  d.require_raw("center_scale");
  Dataset out = d;
  for (auto& s : out.subjects) {
    if (s.T < 2) throw DimensionMismatch("center_scale needs T >= 2");
    const double T = static_cast<double>(s.T);
    for (long c = 0; c < s.Y.cols(); ++c) {
      s.Y.col(c).array() -= s.Y.col(c).mean();
      if (unit_variance) {
        // divisor T, matching the covariance convention, so that the
        // scaled covariance has unit diagonal (covariance == correlation)
        const double var = s.Y.col(c).squaredNorm() / T;
        if (var <= 0.0)
          throw ZeroVariance("subject " + s.id + " column " +
                             std::to_string(c));
        s.Y.col(c) /= std::sqrt(var);
      }
    }
    s.S = sample_covariance(s.Y);
  }
  return out;
}

MatrixXd pooled_covariance(const Dataset& d) {
  if (d.subjects.empty()) throw DimensionMismatch("empty dataset");
  MatrixXd H = MatrixXd::Zero(d.p, d.p);
  double total_T = 0.0;
  for (const auto& s : d.subjects) {
    H += static_cast<double>(s.T) * s.S;
    total_T += static_cast<double>(s.T);
  }
  H /= total_T;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H, Eigen::EigenvaluesOnly);
  const double tol = 1e-10 * H.trace() / static_cast<double>(d.p);
  if (!(es.eigenvalues().minCoeff() > tol))
    throw SingularPooled("smallest eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()));
  return H;
}

}  // namespace capclust
