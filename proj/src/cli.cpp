#include "sthcm/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sthcm/collapse.hpp"
#include "sthcm/core_data.hpp"
#include "sthcm/dgp.hpp"
#include "sthcm/errors.hpp"
#include "sthcm/experiments.hpp"
#include "sthcm/gbm.hpp"
#include "sthcm/gcomp.hpp"
#include "sthcm/lmm.hpp"

namespace fs = std::filesystem;

namespace sthcm {

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::size_t workers = 1;
  bool force = false;
  std::string mode = "observed-lag";
  std::optional<std::uint64_t> seed;
  bool verbose = false;

  // fit / ate
  std::string panel_path;
  std::string graph_path;
  std::string fit_path;
  std::string variant = "ST-HCM";
  std::string backend = "lmm";
  std::size_t horizon = 0;

  // experiment
  std::string kind;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("--config", "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidConfig("--config", std::string("not valid JSON: ") + e.what());
  }
}

// Output files are declared up front so nothing is written when any of them
// would clobber an existing file.
class OutputDir {
 public:
  OutputDir(const std::string& dir, bool force) : dir_(dir), force_(force) {}

  fs::path claim(const std::string& name) {
    const fs::path p = dir_ / name;
    if (!force_ && fs::exists(p))
      throw Error("refusing to overwrite '" + p.string() + "' (pass --force)");
    return p;
  }

  void prepare() { fs::create_directories(dir_); }

 private:
  fs::path dir_;
  bool force_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

SpatialGraph default_graph_for(std::size_t n_units) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_units))));
  if (side * side == n_units) return grid_graph(side, side);
  return grid_graph(1, n_units);
}

SpatialGraph graph_for(const Options& o, std::size_t n_units) {
  if (o.graph_path.empty()) return default_graph_for(n_units);
  try {
    return load_graph_json(o.graph_path);
  } catch (const Error& e) {
    throw InvalidConfig("--graph", e.what());
  }
}

Json run_record(const std::string& subcommand, const Options& o) {
  Json r{{"subcommand", subcommand}, {"code_version", version()}, {"mode", o.mode}};
  if (!o.config_path.empty()) r["config_path"] = o.config_path;
  if (o.seed) r["seed"] = *o.seed;
  return r;
}

// ---- subcommands -----------------------------------------------------------

int cmd_generate(const Options& o, std::ostream& out) {
  DgpConfig config;
  if (!o.config_path.empty()) config = config_from_json(read_json_file(o.config_path));
  if (o.seed) config.seed = *o.seed;
  validate(config);

  OutputDir dir(o.out_dir, o.force);
  const auto panel_path = dir.claim("panel.csv");
  const auto latent_path = dir.claim("latent_u.csv");
  const auto graph_path = dir.claim("graph.json");
  const auto meta_path = dir.claim("metadata.json");
  dir.prepare();

  const auto data = generate(config);
  write_panel_csv(data.panel, panel_path);
  write_latent_csv(data, latent_path);
  write_graph_json(config.graph.build(), graph_path);
  auto meta = run_record("generate", o);
  meta["config"] = config_to_json(config);
  meta["rows"] = data.panel.size();
  write_json(meta_path, meta);
  out << "wrote " << data.panel.size() << " panel rows to " << panel_path.string() << '\n';
  return 0;
}

PanelDataset read_panel(const Options& o) {
  if (o.panel_path.empty()) throw InvalidConfig("--panel", "a panel CSV is required");
  try {
    return load_panel_csv(o.panel_path);
  } catch (const Error& e) {
    throw InvalidConfig("--panel", e.what());
  }
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto panel = read_panel(o);
  const auto graph = graph_for(o, panel.n_units());
  const auto variant = parse_variant(o.variant);

  OutputDir dir(o.out_dir, o.force);
  const auto fit_path = dir.claim("fit.json");
  const auto meta_path = dir.claim("fit.metadata.json");
  dir.prepare();

  const auto fit = fit_lmm(panel, graph, variant);
  write_json(fit_path, lmm_to_json(fit));
  auto meta = run_record("fit", o);
  meta["panel"] = o.panel_path;
  meta["graph"] = graph_to_json(graph);
  meta["variant"] = to_string(variant);
  write_json(meta_path, meta);
  out << to_string(variant) << " beta_a = " << format_double(fit.beta_a) << '\n';
  return 0;
}

int cmd_ate(const Options& o, std::ostream& out) {
  const auto panel = read_panel(o);
  const auto graph = graph_for(o, panel.n_units());
  const auto mode = parse_mode(o.mode);
  const std::size_t horizon = o.horizon ? o.horizon : panel.t_steps();
  if (horizon > panel.t_steps()) throw InvalidConfig("--horizon", "exceeds the panel length");

  OutputDir dir(o.out_dir, o.force);
  const auto ate_path = dir.claim("ate.json");
  const auto meta_path = dir.claim("ate.metadata.json");

  AteEstimate estimate;
  Json model_desc;
  if (o.backend == "gbm") {
    const auto variant = parse_variant(o.variant);
    const auto models = fit_gbm_per_unit(panel, graph, variant, GbmHyperparams{});
    estimate = estimate_ate(models, panel, graph, horizon, mode);
    const GbmHyperparams hp;
    model_desc = Json{{"backend", "gbm"},
                      {"variant", to_string(variant)},
                      {"n_trees", hp.n_trees},
                      {"max_depth", hp.max_depth},
                      {"min_samples_leaf", hp.min_samples_leaf},
                      {"learning_rate", hp.learning_rate}};
  } else if (o.backend == "lmm") {
    LmmFit fit;
    if (!o.fit_path.empty()) {
      try {
        std::ifstream in(o.fit_path, std::ios::binary);
        if (!in) throw Error("cannot open '" + o.fit_path + "'");
        fit = lmm_from_json(Json::parse(in));
      } catch (const Json::parse_error& e) {
        throw InvalidConfig("--fit", e.what());
      } catch (const Error& e) {
        throw InvalidConfig("--fit", e.what());
      }
    } else {
      fit = fit_lmm(panel, graph, parse_variant(o.variant));
    }
    estimate = estimate_ate(fit, panel, graph, horizon, mode);
    model_desc = Json{{"backend", "lmm"}, {"fit", lmm_to_json(fit)}};
  } else {
    throw InvalidConfig("--backend", "expected 'lmm' or 'gbm'");
  }

  dir.prepare();
  write_json(ate_path, ate_to_json(estimate));
  auto meta = run_record("ate", o);
  meta["panel"] = o.panel_path;
  meta["graph"] = graph_to_json(graph);
  meta["model"] = model_desc;
  write_json(meta_path, meta);
  out << "ate = " << format_double(estimate.ate) << " (" << to_string(mode) << ", horizon "
      << horizon << ")\n";
  return 0;
}

template <typename T>
std::vector<T> read_list(const Json& doc, const char* key, std::vector<T> fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc[key].get<std::vector<T>>();
  } catch (const Json::exception&) {
    throw InvalidConfig(key, "must be an array of numbers");
  }
}

std::size_t read_size(const Json& doc, const char* key, std::size_t fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc[key].is_number_integer() || doc[key].get<long long>() < 1)
    throw InvalidConfig(key, "must be a positive integer");
  return doc[key].get<std::size_t>();
}

int cmd_experiment(const Options& o, std::ostream& out) {
  Json doc = o.config_path.empty() ? Json::object() : read_json_file(o.config_path);
  if (!doc.is_object()) throw InvalidConfig("<root>", "experiment config must be an object");
  static const std::vector<std::string> known{"dgp",    "n_trials", "gamma_grid",     "rho_grid",
                                              "m_grid", "axis",     "values",         "base_seed",
                                              "oracle_rollouts"};
  for (const auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidConfig(key, "unknown field");

  DgpConfig config;
  if (doc.contains("dgp")) config = config_from_json(doc["dgp"]);
  std::uint64_t base_seed = config.seed;
  if (doc.contains("base_seed")) {
    if (!doc["base_seed"].is_number_unsigned()) throw InvalidConfig("base_seed", "must be a non-negative integer");
    base_seed = doc["base_seed"].get<std::uint64_t>();
  }
  if (o.seed) base_seed = *o.seed;
  const auto mode = parse_mode(o.mode);

  RunOptions run;
  run.workers = o.workers;
  run.oracle_rollouts = read_size(doc, "oracle_rollouts", run.oracle_rollouts);

  OutputDir dir(o.out_dir, o.force);
  const auto csv_path = dir.claim("results.csv");
  const auto meta_path = dir.claim("results.metadata.json");

  ExperimentTable table;
  if (o.kind == "unbiasedness") {
    table = run_unbiasedness(base_seed, read_size(doc, "n_trials", 100), config, mode, run);
  } else if (o.kind == "consistency") {
    table = run_consistency(base_seed, read_list<std::size_t>(doc, "m_grid", {10, 25, 50, 100}),
                            read_size(doc, "n_trials", 50), config, mode, run);
  } else if (o.kind == "grid") {
    table = run_grid(base_seed, read_list<double>(doc, "gamma_grid", {0, 1, 2, 3, 4}),
                     read_list<double>(doc, "rho_grid", {0, 0.5, 1, 1.5, 2}),
                     read_size(doc, "n_trials", 20), config, mode, run);
  } else if (o.kind == "robustness") {
    const std::string axis = doc.value("axis", std::string("kappa"));
    RobustnessAxis ax;
    if (axis == "delta") ax = RobustnessAxis::Delta;
    else if (axis == "kappa") ax = RobustnessAxis::Kappa;
    else throw InvalidConfig("axis", "expected 'delta' or 'kappa'");
    const std::vector<double> fallback = ax == RobustnessAxis::Delta ? std::vector<double>{0, 0.25, 0.5}
                                                                     : std::vector<double>{0, 0.5, 1.0};
    table = run_robustness(base_seed, ax, read_list<double>(doc, "values", fallback),
                           read_size(doc, "n_trials", 20), config, mode, run);
  } else {
    throw InvalidConfig("--kind", "expected unbiasedness, consistency, grid or robustness");
  }

  dir.prepare();
  write_text(csv_path, results_csv(table));
  auto meta = run_record("experiment", o);
  meta["kind"] = o.kind;
  meta["run"] = table.metadata;
  write_json(meta_path, meta);

  out << "wrote " << table.rows.size() << " rows to " << csv_path.string() << '\n';
  out << std::left << std::setw(12) << "model" << std::setw(8) << "gamma" << std::setw(8) << "rho"
      << std::setw(8) << "delta" << std::setw(8) << "kappa" << std::setw(6) << "m"
      << "mean_abs_error\n";
  for (const auto& c : summarize(table))
    out << std::left << std::setw(12) << to_string(c.model) << std::setw(8) << c.gamma
        << std::setw(8) << c.rho << std::setw(8) << c.delta << std::setw(8) << c.kappa
        << std::setw(6) << c.m << c.mean_abs_error << '\n';
  return 0;
}

int cmd_verify_collapse(const Options& o, std::ostream& out) {
  Json doc = o.config_path.empty() ? Json::object() : read_json_file(o.config_path);
  const auto model = collapse_model_from_json(doc);
  const auto m_grid = read_list<std::size_t>(doc, "m_grid", {2, 4, 8, 16});

  OutputDir dir(o.out_dir, o.force);
  const auto csv_path = dir.claim("collapse_kl.csv");
  const auto model_path = dir.claim("collapse_model.json");

  const auto report = kl_curve(model, m_grid);
  dir.prepare();
  write_text(csv_path, collapse_csv(report));
  auto meta = run_record("verify-collapse", o);
  meta["model"] = collapse_model_to_json(model);
  meta["m_grid"] = m_grid;
  write_json(model_path, meta);
  out << collapse_csv(report);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal hierarchical causal effect toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config_path, "JSON configuration file");
    if (needs_config) cfg->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory (created if absent)")->required();
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", o.force, "overwrite existing output files");
    sub->add_option("--mode", o.mode, "G-computation mode")
        ->check(CLI::IsMember({"propagate", "observed-lag"}));
    sub->add_option("--seed", o.seed, "seed override");
    sub->add_flag("-v,--verbose", o.verbose, "progress messages on stderr");
  };

  auto* gen = app.add_subcommand("generate", "draw a synthetic panel");
  common(gen, false);

  auto* fit = app.add_subcommand("fit", "fit a pooled fixed-effects model");
  common(fit, false);
  fit->add_option("--panel", o.panel_path, "panel CSV")->required();
  fit->add_option("--graph", o.graph_path, "graph JSON");
  fit->add_option("--variant", o.variant, "Aggregated, T-HCM or ST-HCM");

  auto* ate = app.add_subcommand("ate", "estimate the average treatment effect");
  common(ate, false);
  ate->add_option("--panel", o.panel_path, "panel CSV")->required();
  ate->add_option("--graph", o.graph_path, "graph JSON");
  ate->add_option("--fit", o.fit_path, "fitted model JSON (lmm backend)");
  ate->add_option("--variant", o.variant, "Aggregated, T-HCM or ST-HCM");
  ate->add_option("--backend", o.backend, "lmm or gbm");
  ate->add_option("--horizon", o.horizon, "horizon in steps (default: panel length)");

  auto* exp = app.add_subcommand("experiment", "run a seeded simulation study");
  common(exp, false);
  exp->add_option("--kind", o.kind, "unbiasedness, consistency, grid or robustness")->required();

  auto* col = app.add_subcommand("verify-collapse", "exact KL curve of the collapse toy model");
  common(col, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (o.verbose) err << "sthcm " << version() << '\n';
    if (gen->parsed()) return cmd_generate(o, out);
    if (fit->parsed()) return cmd_fit(o, out);
    if (ate->parsed()) return cmd_ate(o, out);
    if (exp->parsed()) return cmd_experiment(o, out);
    if (col->parsed()) return cmd_verify_collapse(o, out);
  } catch (const InvalidConfig& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const StateSpaceTooLarge& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sthcm
