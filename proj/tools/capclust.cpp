// capclust command-line interface: simulate, fit, select, bootstrap,
// evaluate, benchmark. Every run writes a manifest (config echo, seed,
// input digests, timings) next to its outputs; reruns with identical
// inputs and seed reproduce identical numbers.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "capclust/harness.hpp"
#include "capclust/io.hpp"
#include "capclust/parallel.hpp"

namespace fs = std::filesystem;
using namespace capclust;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);
    start_ = std::chrono::steady_clock::now();
  }

  std::string path(const std::string& name) {
    written_.push_back((fs::path(dir_) / name).string());
    return written_.back();
  }

  void stage_done(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    timings_[name] =
        std::chrono::duration<double>(now - last_.value_or(start_)).count();
    last_ = now;
  }

  void write_manifest(const std::string& command, const json& config,
                      std::uint64_t seed,
                      const std::vector<std::string>& inputs) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["version"] = kVersion;
    m["inputs"] = json::object();
    for (const auto& p : inputs) {
      char d[20];
      std::snprintf(d, sizeof(d), "%016llx",
                    static_cast<unsigned long long>(file_digest(p)));
      m["inputs"][p] = d;
    }
    m["wall_clock_sec"] = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start_)
                              .count();
    m["stage_timings_sec"] = timings_;
    write_json_file(m, path("manifest.json"));
  }

  // Remove everything this run produced (called on failure).
  void discard() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> written_;
  std::chrono::steady_clock::time_point start_;
  std::optional<std::chrono::steady_clock::time_point> last_;
  std::map<std::string, double> timings_;
};

struct CommonArgs {
  std::string data, covariates, cov_matrices, config, out = ".";
  int K = 2;
  int max_components = 1;
  double dfd_threshold = 2.0;
  int restarts = 10;
  std::uint64_t seed = 0;
  int threads = 1;

  void add_data_flags(CLI::App* cmd) {
    cmd->add_option("--data", data, "time-series NDJSON file");
    cmd->add_option("--covariates", covariates, "covariates CSV file");
    cmd->add_option("--cov-matrices", cov_matrices,
                    "precomputed covariance NDJSON file (instead of --data)");
  }

  Dataset load() const {
    if (!cov_matrices.empty()) {
      if (covariates.empty()) throw ConfigError("--covariates is required");
      return load_dataset_cov(cov_matrices, covariates);
    }
    if (data.empty() || covariates.empty())
      throw ConfigError("--data and --covariates are required");
    return load_dataset(data, covariates);
  }

  EmConfig em_config() const {
    EmConfig cfg;
    if (!config.empty()) cfg = em_config_from_json(read_json_file(config));
    cfg.n_restarts = restarts;
    cfg.seed = seed;
    cfg.dfd_threshold = dfd_threshold;
    cfg.max_components = max_components;
    cfg.threads = threads;
    return cfg;
  }

  json echo() const {
    json j;
    j["K"] = K;
    j["max_components"] = max_components;
    j["dfd_threshold"] = dfd_threshold;
    j["restarts"] = restarts;
    j["threads"] = threads;
    if (!config.empty()) j["em_config"] = read_json_file(config);
    return j;
  }

  std::vector<std::string> input_files() const {
    std::vector<std::string> v;
    if (!data.empty()) v.push_back(data);
    if (!cov_matrices.empty()) v.push_back(cov_matrices);
    if (!covariates.empty()) v.push_back(covariates);
    if (!config.empty()) v.push_back(config);
    return v;
  }
};

void write_labels_csv(const ComponentSet& cs, const Dataset& d,
                      const std::string& path) {
  std::ostringstream out;
  out << "subject,component,cluster,max_responsibility\n";
  for (size_t j = 0; j < cs.fits.size(); ++j) {
    const auto& fit = cs.fits[j];
    for (long i = 0; i < d.n(); ++i)
      out << d.subjects[i].id << "," << (j + 1) << ","
          << (fit.labels[i] + 1) << ","
          << fmt17(fit.resp.eta.row(i).maxCoeff()) << "\n";
  }
  write_text_file(out.str(), path);
}

void write_dfd_csv(const ComponentSet& cs, const std::string& path) {
  std::ostringstream out;
  out << "component,dfd,accepted\n";
  for (size_t j = 0; j < cs.dfd_trace.size(); ++j)
    out << (j + 1) << "," << fmt17(cs.dfd_trace[j]) << ","
        << (cs.accepted[j] ? 1 : 0) << "\n";
  write_text_file(out.str(), path);
}

void write_loadings_csv(const ComponentSet& cs, const std::string& path) {
  std::ostringstream out;
  out << "component,index,loading\n";
  for (size_t j = 0; j < cs.gammas.size(); ++j)
    for (long i = 0; i < cs.gammas[j].size(); ++i)
      out << (j + 1) << "," << (i + 1) << "," << fmt17(cs.gammas[j][i]) << "\n";
  write_text_file(out.str(), path);
}

// Polar-plot coordinates: per component, each subject's angle within its
// cluster wedge and its top responsibility as the radius.
void write_polar_csv(const ComponentSet& cs, const Dataset& d,
                     const std::string& path) {
  std::ostringstream out;
  out << "component,subject,cluster,angle,radius\n";
  for (size_t j = 0; j < cs.fits.size(); ++j) {
    const auto& fit = cs.fits[j];
    const int K = fit.params.K;
    std::vector<long> count(K, 0), seen(K, 0);
    for (int l : fit.labels) ++count[l];
    for (long i = 0; i < d.n(); ++i) {
      const int k = fit.labels[i];
      const double wedge = 2.0 * M_PI / K;
      const double angle =
          wedge * k +
          wedge * (static_cast<double>(++seen[k]) / (count[k] + 1.0));
      out << (j + 1) << "," << d.subjects[i].id << "," << (k + 1) << ","
          << fmt17(angle) << "," << fmt17(fit.resp.eta.row(i).maxCoeff())
          << "\n";
    }
  }
  write_text_file(out.str(), path);
}

int cmd_simulate(const std::string& config_path, const std::string& out_prefix,
                 std::uint64_t seed, bool seed_given) {
  SimConfig cfg = sim_config_from_json(read_json_file(config_path));
  if (seed_given) cfg.seed = seed;
  auto [data, truth] = generate_dataset(cfg);

  OutputDir dir(fs::path(out_prefix).parent_path().string().empty()
                    ? "."
                    : fs::path(out_prefix).parent_path().string());
  const std::string stem = fs::path(out_prefix).filename().string();
  save_timeseries(data, dir.path(stem + "_timeseries.ndjson"));
  save_covariates(data, dir.path(stem + "_covariates.csv"));
  write_json_file(to_json(truth), dir.path(stem + "_truth.json"));
  dir.stage_done("simulate");
  dir.write_manifest("simulate", read_json_file(config_path), cfg.seed,
                     {config_path});
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  OutputDir dir(args.out);
  try {
    Dataset d = args.load();
    dir.stage_done("load");
    ComponentSet cs =
        extract_components(d, args.K, args.max_components, args.em_config());
    dir.stage_done("fit");
    write_json_file(to_json(cs), dir.path("components.json"));
    write_dfd_csv(cs, dir.path("dfd_trace.csv"));
    write_labels_csv(cs, d, dir.path("labels.csv"));
    write_loadings_csv(cs, dir.path("loadings.csv"));
    write_polar_csv(cs, d, dir.path("polar.csv"));
    dir.write_manifest("fit", args.echo(), args.seed, args.input_files());
    return 0;
  } catch (...) {
    dir.discard();
    throw;
  }
}

int cmd_select(const CommonArgs& args, int k_min, int k_max) {
  OutputDir dir(args.out);
  try {
    Dataset d = args.load();
    BicReport report = select_num_clusters(d, k_min, k_max, args.em_config());
    dir.stage_done("select");
    write_json_file(to_json(report), dir.path("bic.json"));
    std::ostringstream csv;
    csv << "K,component,bic\n";
    for (const auto& [K, rows] : report.per_component)
      for (const auto& [comp, b] : rows)
        csv << K << "," << comp << "," << fmt17(b) << "\n";
    write_text_file(csv.str(), dir.path("bic.csv"));
    dir.write_manifest("select", args.echo(), args.seed, args.input_files());
    std::cout << "chosen_K " << report.chosen_K << "\n";
    return 0;
  } catch (...) {
    dir.discard();
    throw;
  }
}

std::vector<ContrastSpec> parse_contrasts(
    const std::vector<std::string>& specs) {
  std::vector<ContrastSpec> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("contrast must be name=c1,c2,...: " + s);
    ContrastSpec c;
    c.name = s.substr(0, eq);
    std::vector<double> vals;
    std::stringstream ss(s.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    c.coeffs = Eigen::Map<VectorXd>(vals.data(), vals.size());
    out.push_back(std::move(c));
  }
  return out;
}

int cmd_bootstrap(const CommonArgs& args, int B, double level,
                  int restarts_per_replicate,
                  const std::vector<std::string>& contrast_specs) {
  OutputDir dir(args.out);
  try {
    Dataset d = args.load();
    dir.stage_done("load");
    ComponentSet cs =
        extract_components(d, args.K, args.max_components, args.em_config());
    dir.stage_done("fit");
    const auto contrasts = parse_contrasts(contrast_specs);
    BootstrapReport report =
        bootstrap_inference(d, cs, B, level, args.seed, args.em_config(),
                            contrasts, restarts_per_replicate);
    dir.stage_done("bootstrap");

    write_json_file(to_json(report), dir.path("bootstrap.json"));
    std::ostringstream csv;
    csv << "component,cluster,term,estimate,lower,upper\n";
    auto emit = [&](int comp, int k, const std::string& term,
                    const CoefficientCI& ci) {
      csv << comp << "," << k << "," << term << "," << fmt17(ci.estimate)
          << "," << fmt17(ci.lower) << "," << fmt17(ci.upper) << "\n";
    };
    for (size_t j = 0; j < report.components.size(); ++j) {
      const auto& c = report.components[j];
      for (size_t k = 0; k < c.beta.size(); ++k) {
        for (size_t t = 0; t < c.beta[k].size(); ++t)
          emit(static_cast<int>(j) + 1, static_cast<int>(k) + 1,
               "beta" + std::to_string(t), c.beta[k][t]);
        for (size_t t = 0; t < c.alpha[k].size(); ++t)
          emit(static_cast<int>(j) + 1, static_cast<int>(k) + 1,
               "alpha" + std::to_string(t), c.alpha[k][t]);
        for (size_t t = 0; t < c.contrasts[k].size(); ++t)
          emit(static_cast<int>(j) + 1, static_cast<int>(k) + 1,
               report.contrast_specs[t].name, c.contrasts[k][t]);
      }
    }
    write_text_file(csv.str(), dir.path("bootstrap.csv"));
    dir.write_manifest("bootstrap", args.echo(), args.seed,
                       args.input_files());
    return 0;
  } catch (...) {
    dir.discard();
    throw;
  }
}

int cmd_evaluate(const std::string& fit_path, const std::string& truth_path,
                 const std::string& out) {
  OutputDir dir(out);
  try {
    ComponentSet cs = components_from_json(read_json_file(fit_path));
    SimGroundTruth truth = truth_from_json(read_json_file(truth_path));

    std::ostringstream csv;
    csv << "dim,component,similarity,jaccard,ari,clus_error\n";
    for (int dim : truth.structured_dims) {
      const VectorXd pi_true = truth.Pi.col(dim - 1);
      int best_j = 0;
      double best_sim = -1.0;
      for (size_t j = 0; j < cs.gammas.size(); ++j) {
        const double s = projection_similarity(cs.gammas[j], pi_true);
        if (s > best_sim) {
          best_sim = s;
          best_j = static_cast<int>(j);
        }
      }
      const auto& labels_true = truth.memberships.at(dim);
      const auto& labels = cs.fits[best_j].labels;
      csv << dim << "," << (best_j + 1) << "," << fmt17(best_sim) << ","
          << fmt17(jaccard_index(labels, labels_true)) << ","
          << fmt17(adjusted_rand_index(labels, labels_true)) << ","
          << fmt17(classification_error(labels, labels_true)) << "\n";
    }
    write_text_file(csv.str(), dir.path("evaluation.csv"));
    dir.write_manifest("evaluate", json::object(), 0, {fit_path, truth_path});
    return 0;
  } catch (...) {
    dir.discard();
    throw;
  }
}

int cmd_benchmark(const CommonArgs& args, const std::string& sim_config_path,
                  int replications, const std::vector<std::string>& methods,
                  const std::vector<std::string>& external_labels) {
  OutputDir dir(args.out);
  try {
    SimConfig scfg = sim_config_from_json(read_json_file(sim_config_path));
    scfg.seed = args.seed;
    EmConfig ecfg = args.em_config();

    std::vector<RepScore> scores(replications);
    parallel_for(replications, args.threads, [&](long r) {
      scores[r] = run_replication(scfg, ecfg,
                                  static_cast<std::uint64_t>(r), methods);
    });
    dir.stage_done("replications");

    // External label files: CSV `rep,i,label`, scored like any method.
    for (const auto& spec : external_labels) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--external-labels must be name=path");
      const std::string name = spec.substr(0, eq);
      std::ifstream in(spec.substr(eq + 1));
      if (!in) throw ParseError("cannot read " + spec.substr(eq + 1));
      std::map<long, std::vector<int>> per_rep;
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string rep_s, i_s, l_s;
        std::getline(ss, rep_s, ',');
        std::getline(ss, i_s, ',');
        std::getline(ss, l_s, ',');
        auto& v = per_rep[std::stol(rep_s)];
        const size_t i = std::stoul(i_s);
        if (v.size() <= i) v.resize(i + 1, 0);
        v[i] = std::stoi(l_s);
      }
      for (auto& [r, labels] : per_rep) {
        if (r < 0 || r >= replications) continue;
        SimConfig rcfg = scfg;
        rcfg.seed = mix64(scfg.seed) + static_cast<std::uint64_t>(r);
        auto [data, truth] = generate_dataset(rcfg);
        for (int dim : truth.structured_dims)
          scores[r].clustering[dim][name] = {
              jaccard_index(labels, truth.memberships.at(dim)),
              adjusted_rand_index(labels, truth.memberships.at(dim)),
              classification_error(labels, truth.memberships.at(dim))};
      }
    }

    long failures = 0;
    for (const auto& s : scores)
      if (!s.ok) ++failures;

    // Table-1-shaped CSV: projection similarity + coefficient bias/MSE.
    std::ostringstream t1;
    t1 << "dim,similarity_mean,similarity_se,cluster,bias,mse,replications\n";
    for (int dim : scfg.structured_dims) {
      std::vector<double> sims;
      std::vector<std::vector<VectorXd>> betas;
      for (const auto& s : scores) {
        if (!s.ok || !s.similarity.count(dim)) continue;
        sims.push_back(s.similarity.at(dim));
        betas.push_back(s.beta_hat.at(dim));
      }
      if (sims.empty()) continue;
      const MeanSE ms = mean_se(sims);
      if (scfg.beta_true.count(dim)) {
        const CoefficientScore cscore =
            coefficient_bias_mse(betas, scfg.beta_true.at(dim));
        for (int k = 0; k < cscore.bias_scalar.size(); ++k)
          t1 << dim << "," << fmt17(ms.mean) << "," << fmt17(ms.se) << ","
             << (k + 1) << "," << fmt17(cscore.bias_scalar[k]) << ","
             << fmt17(cscore.mse_scalar[k]) << "," << ms.count << "\n";
      }
    }
    write_text_file(t1.str(), dir.path("table1.csv"));

    // Table-2-shaped CSV: clustering metrics per method.
    std::ostringstream t2;
    t2 << "dim,method,jaccard,ari,clus_error,replications\n";
    for (int dim : scfg.structured_dims) {
      std::vector<std::string> names;
      for (const auto& s : scores)
        if (s.ok && s.clustering.count(dim))
          for (const auto& [m, v] : s.clustering.at(dim))
            if (std::find(names.begin(), names.end(), m) == names.end())
              names.push_back(m);
      for (const auto& m : names) {
        std::vector<double> jac, ari, err;
        for (const auto& s : scores) {
          if (!s.ok || !s.clustering.count(dim)) continue;
          auto it = s.clustering.at(dim).find(m);
          if (it == s.clustering.at(dim).end()) continue;
          jac.push_back(it->second[0]);
          ari.push_back(it->second[1]);
          err.push_back(it->second[2]);
        }
        t2 << dim << "," << m << "," << fmt17(mean_se(jac).mean) << ","
           << fmt17(mean_se(ari).mean) << "," << fmt17(mean_se(err).mean)
           << "," << jac.size() << "\n";
      }
    }
    write_text_file(t2.str(), dir.path("table2.csv"));

    json echo = args.echo();
    echo["sim_config"] = read_json_file(sim_config_path);
    echo["replications"] = replications;
    echo["failed_replications"] = failures;
    echo["methods"] = methods;
    dir.write_manifest("benchmark", echo, args.seed, {sim_config_path});
    return 0;
  } catch (...) {
    dir.discard();
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-assisted mixture-of-experts clustering of "
               "covariance matrices"};
  app.require_subcommand(1);

  CommonArgs args;

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_config, sim_out = "sim";
  std::uint64_t sim_seed = 0;
  auto* sim_cfg_opt =
      sim->add_option("--config", sim_config, "simulation config JSON")
          ->required();
  sim->add_option("--out", sim_out, "output prefix");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "seed override");
  (void)sim_cfg_opt;

  // fit
  auto* fit = app.add_subcommand("fit", "extract components and cluster");
  args.add_data_flags(fit);
  fit->add_option("--k", args.K, "number of clusters");
  fit->add_option("--max-components", args.max_components);
  fit->add_option("--dfd-threshold", args.dfd_threshold);
  fit->add_option("--restarts", args.restarts);
  fit->add_option("--seed", args.seed);
  fit->add_option("--threads", args.threads);
  fit->add_option("--config", args.config, "EM config JSON");
  fit->add_option("--out", args.out, "output directory");

  // select
  auto* sel = app.add_subcommand("select", "choose the cluster count by BIC");
  int k_min = 1, k_max = 3;
  args.add_data_flags(sel);
  sel->add_option("--k-min", k_min);
  sel->add_option("--k-max", k_max);
  sel->add_option("--max-components", args.max_components);
  sel->add_option("--dfd-threshold", args.dfd_threshold);
  sel->add_option("--restarts", args.restarts);
  sel->add_option("--seed", args.seed);
  sel->add_option("--threads", args.threads);
  sel->add_option("--config", args.config, "EM config JSON");
  sel->add_option("--out", args.out, "output directory");

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "coefficient confidence intervals");
  int B = 200, boot_restarts = 0;
  double level = 0.05;
  std::vector<std::string> contrast_specs;
  args.add_data_flags(boot);
  boot->add_option("--k", args.K);
  boot->add_option("--B", B, "bootstrap replicates");
  boot->add_option("--level", level, "significance level (0.05 -> 95% CI)");
  boot->add_option("--max-components", args.max_components);
  boot->add_option("--dfd-threshold", args.dfd_threshold);
  boot->add_option("--restarts", args.restarts);
  boot->add_option("--restarts-per-replicate", boot_restarts);
  boot->add_option("--seed", args.seed);
  boot->add_option("--threads", args.threads);
  boot->add_option("--config", args.config, "EM config JSON");
  boot->add_option("--contrast", contrast_specs,
                   "named coefficient contrast name=c1,c2,...");
  boot->add_option("--out", args.out, "output directory");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a fit against ground truth");
  std::string fit_path, truth_path;
  ev->add_option("--fit", fit_path, "components.json")->required();
  ev->add_option("--truth", truth_path, "truth.json")->required();
  ev->add_option("--out", args.out, "output directory");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "replicated simulation study");
  int replications = 50;
  std::vector<std::string> methods = kAllMethods;
  std::vector<std::string> external_labels;
  bench->add_option("--config", sim_config, "simulation config JSON")
      ->required();
  bench->add_option("--replications", replications);
  bench->add_option("--k", args.K);
  bench->add_option("--max-components", args.max_components);
  bench->add_option("--dfd-threshold", args.dfd_threshold);
  bench->add_option("--restarts", args.restarts);
  bench->add_option("--seed", args.seed);
  bench->add_option("--threads", args.threads);
  bench->add_option("--methods", methods, "subset of methods to run");
  bench->add_option("--external-labels", external_labels,
                    "name=path of externally produced label files");
  bench->add_option("--em-config", args.config, "EM config JSON");
  bench->add_option("--out", args.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // exit code 0 for --help/--version, 2 for any usage error
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_config, sim_out, sim_seed,
                          sim_seed_opt->count() > 0);
    if (fit->parsed()) return cmd_fit(args);
    if (sel->parsed()) return cmd_select(args, k_min, k_max);
    if (boot->parsed())
      return cmd_bootstrap(args, B, level, boot_restarts, contrast_specs);
    if (ev->parsed()) return cmd_evaluate(fit_path, truth_path, args.out);
    if (bench->parsed())
      return cmd_benchmark(args, sim_config, replications, methods,
                           external_labels);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
