#include "capclust/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace capclust {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json to_json(const VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

MatrixXd matrix_from_json(const json& j) {
  const long rows = static_cast<long>(j.size());
  const long cols = rows ? static_cast<long>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

json to_json(const ModelParams& p) {
  json j;
  j["K"] = p.K;
  j["gamma"] = to_json(p.gamma);
  j["beta"] = json::array();
  for (const auto& b : p.beta) j["beta"].push_back(to_json(b));
  j["alpha"] = json::array();
  for (const auto& a : p.alpha) j["alpha"].push_back(to_json(a));
  return j;
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.K = j.at("K").get<int>();
  p.gamma = vector_from_json(j.at("gamma"));
  for (const auto& b : j.at("beta")) p.beta.push_back(vector_from_json(b));
  for (const auto& a : j.at("alpha")) p.alpha.push_back(vector_from_json(a));
  return p;
}

json to_json(const FitResult& f) {
  json j;
  j["params"] = to_json(f.params);
  j["labels"] = f.labels;
  j["responsibilities"] = to_json(f.resp.eta);
  j["loglik"] = f.loglik;
  j["trace"] = f.trace;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["restart_index"] = f.restart_index;
  return j;
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.params = params_from_json(j.at("params"));
  f.labels = j.at("labels").get<std::vector<int>>();
  f.resp.eta = matrix_from_json(j.at("responsibilities"));
  f.loglik = j.at("loglik").get<double>();
  f.trace = j.at("trace").get<std::vector<double>>();
  f.iterations = j.at("iterations").get<int>();
  f.converged = j.at("converged").get<bool>();
  f.restart_index = j.at("restart_index").get<int>();
  return f;
}

json to_json(const ComponentSet& cs) {
  json j;
  j["components"] = json::array();
  for (size_t i = 0; i < cs.gammas.size(); ++i) {
    json c;
    c["gamma"] = to_json(cs.gammas[i]);
    c["dfd"] = cs.dfd_trace[i];
    c["accepted"] = static_cast<bool>(cs.accepted[i]);
    c["fit"] = to_json(cs.fits[i]);
    j["components"].push_back(std::move(c));
  }
  if (cs.error) j["error"] = *cs.error;
  return j;
}

ComponentSet components_from_json(const json& j) {
  ComponentSet cs;
  for (const auto& c : j.at("components")) {
    cs.gammas.push_back(vector_from_json(c.at("gamma")));
    cs.dfd_trace.push_back(c.at("dfd").get<double>());
    cs.accepted.push_back(c.at("accepted").get<bool>());
    cs.fits.push_back(fit_from_json(c.at("fit")));
  }
  if (j.contains("error")) cs.error = j.at("error").get<std::string>();
  return cs;
}

json to_json(const BicReport& r) {
  json j;
  j["chosen_K"] = r.chosen_K;
  j["average"] = json::object();
  for (const auto& [K, v] : r.average) j["average"][std::to_string(K)] = v;
  j["per_component"] = json::object();
  for (const auto& [K, rows] : r.per_component) {
    json arr = json::array();
    for (const auto& [comp, b] : rows)
      arr.push_back({{"component", comp}, {"bic", b}});
    j["per_component"][std::to_string(K)] = std::move(arr);
  }
  j["warnings"] = r.warnings;
  return j;
}

namespace {

json ci_to_json(const CoefficientCI& ci) {
  return {{"estimate", ci.estimate}, {"lower", ci.lower}, {"upper", ci.upper}};
}

}  // namespace

json to_json(const BootstrapReport& r) {
  json j;
  j["B"] = r.B;
  j["level"] = r.level;
  j["components"] = json::array();
  for (const auto& c : r.components) {
    json cj;
    cj["successes"] = c.successes;
    cj["beta"] = json::array();
    cj["alpha"] = json::array();
    cj["contrasts"] = json::array();
    for (const auto& row : c.beta) {
      json arr = json::array();
      for (const auto& ci : row) arr.push_back(ci_to_json(ci));
      cj["beta"].push_back(std::move(arr));
    }
    for (const auto& row : c.alpha) {
      json arr = json::array();
      for (const auto& ci : row) arr.push_back(ci_to_json(ci));
      cj["alpha"].push_back(std::move(arr));
    }
    for (const auto& row : c.contrasts) {
      json arr = json::array();
      for (const auto& ci : row) arr.push_back(ci_to_json(ci));
      cj["contrasts"].push_back(std::move(arr));
    }
    j["components"].push_back(std::move(cj));
  }
  j["contrast_names"] = json::array();
  for (const auto& c : r.contrast_specs) j["contrast_names"].push_back(c.name);
  return j;
}

json to_json(const SimGroundTruth& t) {
  json j;
  j["Pi"] = to_json(t.Pi);
  j["structured_dims"] = t.structured_dims;
  j["memberships"] = json::object();
  for (const auto& [dim, labels] : t.memberships)
    j["memberships"][std::to_string(dim)] = labels;
  j["beta_true"] = json::object();
  for (const auto& [dim, betas] : t.beta_true) {
    json arr = json::array();
    for (const auto& b : betas) arr.push_back(to_json(b));
    j["beta_true"][std::to_string(dim)] = std::move(arr);
  }
  j["alpha_true"] = json::object();
  for (const auto& [dim, a] : t.alpha_true)
    j["alpha_true"][std::to_string(dim)] = to_json(a);
  return j;
}

SimGroundTruth truth_from_json(const json& j) {
  SimGroundTruth t;
  t.Pi = matrix_from_json(j.at("Pi"));
  t.structured_dims = j.at("structured_dims").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("memberships").items())
    t.memberships[std::stoi(k)] = v.get<std::vector<int>>();
  for (const auto& [k, v] : j.at("beta_true").items()) {
    std::vector<VectorXd> betas;
    for (const auto& b : v) betas.push_back(vector_from_json(b));
    t.beta_true[std::stoi(k)] = std::move(betas);
  }
  for (const auto& [k, v] : j.at("alpha_true").items())
    t.alpha_true[std::stoi(k)] = vector_from_json(v);
  return t;
}

EmConfig em_config_from_json(const json& j) {
  EmConfig c;
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.n_restarts = j.value("n_restarts", c.n_restarts);
  c.seed = j.value("seed", c.seed);
  c.newton_max_iter = j.value("newton_max_iter", c.newton_max_iter);
  c.ridge = j.value("ridge", c.ridge);
  c.dfd_threshold = j.value("dfd_threshold", c.dfd_threshold);
  c.max_components = j.value("max_components", c.max_components);
  c.threads = j.value("threads", c.threads);
  const std::string h = j.value("h_matrix", std::string("pooled"));
  if (h == "pooled")
    c.h_matrix = EmConfig::HMatrix::pooled;
  else if (h == "identity")
    c.h_matrix = EmConfig::HMatrix::identity;
  else
    throw ConfigError("h_matrix must be 'pooled' or 'identity'");
  return c;
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig base = default_sim_config();
  SimConfig c;
  c.p = j.value("p", c.p);
  c.n = j.value("n", c.n);
  c.T = j.value("T", c.T);
  c.K = j.value("K", c.K);
  c.seed = j.value("seed", c.seed);
  c.eigen_mean_high = j.value("eigen_mean_high", c.eigen_mean_high);
  c.eigen_mean_low = j.value("eigen_mean_low", c.eigen_mean_low);
  c.eigen_sd = j.value("eigen_sd", c.eigen_sd);
  c.interaction_coef = j.value("interaction_coef", c.interaction_coef);
  c.shared_eigenvectors = j.value("shared_eigenvectors", c.shared_eigenvectors);
  c.t_df = j.value("t_df", c.t_df);
  if (j.contains("structured_dims"))
    c.structured_dims = j.at("structured_dims").get<std::vector<int>>();
  const std::string m = j.value("misspec", std::string("none"));
  if (m == "none")
    c.misspec = SimConfig::Misspec::none;
  else if (m == "variance_interaction")
    c.misspec = SimConfig::Misspec::variance_interaction;
  else if (m == "both_interactions")
    c.misspec = SimConfig::Misspec::both_interactions;
  else
    throw ConfigError("bad misspec value: " + m);
  const std::string nz = j.value("noise", std::string("gaussian"));
  if (nz == "gaussian")
    c.noise = SimConfig::Noise::gaussian;
  else if (nz == "student_t")
    c.noise = SimConfig::Noise::student_t;
  else
    throw ConfigError("bad noise value: " + nz);
  for (int dim : c.structured_dims) {
    if (j.contains("alpha_true") &&
        j.at("alpha_true").contains(std::to_string(dim)))
      c.alpha_true[dim] =
          vector_from_json(j.at("alpha_true").at(std::to_string(dim)));
    else if (base.alpha_true.count(dim))
      c.alpha_true[dim] = base.alpha_true.at(dim);
    else
      throw ConfigError("no alpha_true for dim " + std::to_string(dim));
    if (j.contains("beta_true") &&
        j.at("beta_true").contains(std::to_string(dim))) {
      std::vector<VectorXd> betas;
      for (const auto& b : j.at("beta_true").at(std::to_string(dim)))
        betas.push_back(vector_from_json(b));
      c.beta_true[dim] = std::move(betas);
    } else if (base.beta_true.count(dim)) {
      c.beta_true[dim] = base.beta_true.at(dim);
    } else {
      throw ConfigError("no beta_true for dim " + std::to_string(dim));
    }
  }
  return c;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
  return j;
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

void save_timeseries(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (const auto& s : d.subjects) {
    if (!s.has_raw()) throw RawDataRequired("save_timeseries");
    out << "{\"id\":\"" << s.id << "\",\"Y\":[";
    for (long r = 0; r < s.Y.rows(); ++r) {
      out << (r ? ",[" : "[");
      for (long c = 0; c < s.Y.cols(); ++c)
        out << (c ? "," : "") << fmt17(s.Y(r, c));
      out << "]";
    }
    out << "]}\n";
  }
}

void save_covariates(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "id";
  for (long j = 1; j < d.q1; ++j) out << ",x" << j;
  for (long j = 1; j < d.q2; ++j) out << ",w" << j;
  out << "\n";
  for (const auto& s : d.subjects) {
    out << s.id;
    for (long j = 1; j < d.q1; ++j) out << "," << fmt17(s.x[j]);
    for (long j = 1; j < d.q2; ++j) out << "," << fmt17(s.w[j]);
    out << "\n";
  }
}

}  // namespace capclust
