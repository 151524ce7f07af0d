#include "sthcm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "sthcm/dgp.hpp"
#include "sthcm/errors.hpp"
#include "sthcm/lmm.hpp"
#include "sthcm/rng.hpp"

#ifndef STHCM_VERSION
#define STHCM_VERSION "dev"
#endif

namespace sthcm {

const char* version() { return STHCM_VERSION; }

const std::vector<ModelVariant>& all_variants() {
  static const std::vector<ModelVariant> v{ModelVariant::Aggregated, ModelVariant::THcm,
                                           ModelVariant::StHcm};
  return v;
}

std::vector<double> run_trial(const DgpConfig& config, const std::vector<ModelVariant>& variants,
                              GcompMode mode) {
  const auto data = generate(config);
  const auto graph = config.graph.build();
  std::vector<double> out;
  out.reserve(variants.size());
  for (auto v : variants) {
    const auto fit = fit_lmm(data.panel, graph, v);
    out.push_back(estimate_ate(fit, data.panel, graph, config.t_steps, mode).ate);
  }
  return out;
}

namespace {

// One simulation cell: a fully specified config plus the variants to fit.
struct Cell {
  DgpConfig config;
  std::vector<ModelVariant> variants;
  double target = 0.0;
};

struct Task {
  std::size_t cell;
  std::size_t trial;
};

// Runs fn(k) for k in [0, n) over `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

double target_for(const DgpConfig& config, GcompMode mode, std::uint64_t base_seed,
                  std::size_t rollouts) {
  if (mode == GcompMode::ObservedLag) return config.beta_a;
  return oracle_ate(config, config.t_steps, rollouts, RngStream(base_seed, hash_label("oracle")));
}

ExperimentTable run_cells(const std::string& experiment_id, std::uint64_t base_seed,
                          std::vector<Cell> cells, std::size_t n_trials, GcompMode mode,
                          const RunOptions& options, Json params) {
  if (n_trials < 1) throw InvalidConfig("n_trials", "must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  for (auto& cell : cells) {
    validate(cell.config);
    cell.target = target_for(cell.config, mode, base_seed, options.oracle_rollouts);
  }

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t t = 0; t < n_trials; ++t) tasks.push_back({c, t});

  std::vector<std::vector<ExperimentRow>> produced(tasks.size());
  parallel_for(tasks.size(), options.workers, [&](std::size_t k) {
    const auto& task = tasks[k];
    const auto& cell = cells[task.cell];
    DgpConfig config = cell.config;
    config.seed = derive_seed(base_seed, experiment_id, task.trial);
    const auto estimates = run_trial(config, cell.variants, mode);
    for (std::size_t v = 0; v < cell.variants.size(); ++v) {
      ExperimentRow row;
      row.experiment_id = experiment_id;
      row.gamma = config.gamma;
      row.rho = config.rho;
      row.delta = config.delta;
      row.kappa = config.kappa;
      row.m = config.m_subunits;
      row.model = cell.variants[v];
      row.mode = mode;
      row.trial = task.trial;
      row.seed = config.seed;
      row.ate_estimate = estimates[v];
      row.target_ate = cell.target;
      row.abs_error = std::abs(row.ate_estimate - row.target_ate);
      produced[k].push_back(row);
    }
  });

  ExperimentTable table;
  for (auto& rows : produced)
    for (auto& r : rows) table.rows.push_back(std::move(r));
  std::sort(table.rows.begin(), table.rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    return std::tie(a.experiment_id, a.gamma, a.rho, a.delta, a.kappa, a.m, a.model, a.trial) <
           std::tie(b.experiment_id, b.gamma, b.rho, b.delta, b.kappa, b.m, b.model, b.trial);
  });

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  params["experiment_id"] = experiment_id;
  params["base_seed"] = base_seed;
  params["n_trials"] = n_trials;
  params["mode"] = to_string(mode);
  params["horizon"] = cells.empty() ? 0 : cells.front().config.t_steps;
  params["oracle_rollouts"] = options.oracle_rollouts;
  params["seed_rule"] = "seed = derive_seed(base_seed, experiment_id, trial)";
  table.metadata = Json{{"parameters", params},
                        {"rows", table.rows.size()},
                        {"workers", options.workers},
                        {"wall_clock_seconds", elapsed},
                        {"code_version", version()}};
  return table;
}

std::string id_or(const RunOptions& options, const char* fallback) {
  return options.experiment_id.empty() ? fallback : options.experiment_id;
}

}  // namespace

ExperimentTable run_unbiasedness(std::uint64_t base_seed, std::size_t n_trials,
                                 const DgpConfig& config, GcompMode mode, RunOptions options) {
  if (n_trials < 2) throw InvalidConfig("n_trials", "unbiasedness needs at least 2 trials");
  Json params{{"kind", "unbiasedness"}, {"config", config_to_json(config)}};
  return run_cells(id_or(options, "unbiasedness"), base_seed, {{config, {ModelVariant::StHcm}}},
                   n_trials, mode, options, params);
}

ExperimentTable run_consistency(std::uint64_t base_seed, const std::vector<std::size_t>& m_grid,
                                std::size_t n_trials_per_m, const DgpConfig& config, GcompMode mode,
                                RunOptions options) {
  if (m_grid.size() < 3) throw InvalidConfig("m_grid", "needs at least 3 entries");
  for (std::size_t k = 1; k < m_grid.size(); ++k)
    if (m_grid[k] <= m_grid[k - 1]) throw InvalidConfig("m_grid", "must be strictly ascending");
  std::vector<Cell> cells;
  for (auto m : m_grid) {
    Cell cell{config, {ModelVariant::StHcm}};
    cell.config.m_subunits = m;
    cells.push_back(cell);
  }
  Json params{{"kind", "consistency"}, {"config", config_to_json(config)}, {"m_grid", m_grid}};
  return run_cells(id_or(options, "consistency"), base_seed, std::move(cells), n_trials_per_m, mode,
                   options, params);
}

ExperimentTable run_grid(std::uint64_t base_seed, const std::vector<double>& gamma_grid,
                         const std::vector<double>& rho_grid, std::size_t n_trials,
                         const DgpConfig& config, GcompMode mode, RunOptions options) {
  if (gamma_grid.empty()) throw InvalidConfig("gamma_grid", "must not be empty");
  if (rho_grid.empty()) throw InvalidConfig("rho_grid", "must not be empty");
  std::vector<Cell> cells;
  for (double g : gamma_grid)
    for (double r : rho_grid) {
      Cell cell{config, all_variants()};
      cell.config.gamma = g;
      cell.config.rho = r;
      cells.push_back(cell);
    }
  Json params{{"kind", "grid"},
              {"config", config_to_json(config)},
              {"gamma_grid", gamma_grid},
              {"rho_grid", rho_grid}};
  return run_cells(id_or(options, "grid"), base_seed, std::move(cells), n_trials, mode, options,
                   params);
}

ExperimentTable run_robustness(std::uint64_t base_seed, RobustnessAxis axis,
                               const std::vector<double>& value_grid, std::size_t n_trials,
                               const DgpConfig& config, GcompMode mode, RunOptions options) {
  if (value_grid.empty()) throw InvalidConfig("values", "must not be empty");
  const bool drift = axis == RobustnessAxis::Delta;
  std::vector<Cell> cells;
  for (double v : value_grid) {
    Cell cell{config, all_variants()};
    (drift ? cell.config.delta : cell.config.kappa) = v;
    cells.push_back(cell);
  }
  Json params{{"kind", "robustness"},
              {"axis", drift ? "delta" : "kappa"},
              {"config", config_to_json(config)},
              {"values", value_grid}};
  return run_cells(id_or(options, drift ? "robustness-delta" : "robustness-kappa"), base_seed,
                   std::move(cells), n_trials, mode, options, params);
}

std::string results_csv(const ExperimentTable& table) {
  std::ostringstream out;
  out << "experiment_id,gamma,rho,delta,kappa,m,model,mode,trial,seed,ate_estimate,target_ate,abs_error\n";
  for (const auto& r : table.rows)
    out << r.experiment_id << ',' << format_double(r.gamma) << ',' << format_double(r.rho) << ','
        << format_double(r.delta) << ',' << format_double(r.kappa) << ',' << r.m << ','
        << to_string(r.model) << ',' << to_string(r.mode) << ',' << r.trial << ',' << r.seed << ','
        << format_double(r.ate_estimate) << ',' << format_double(r.target_ate) << ','
        << format_double(r.abs_error) << '\n';
  return out.str();
}

std::vector<CellSummary> summarize(const ExperimentTable& table) {
  std::vector<CellSummary> out;
  for (const auto& r : table.rows) {
    const bool same = !out.empty() && out.back().gamma == r.gamma && out.back().rho == r.rho &&
                      out.back().delta == r.delta && out.back().kappa == r.kappa &&
                      out.back().m == r.m && out.back().model == r.model;
    if (!same) out.push_back(CellSummary{r.gamma, r.rho, r.delta, r.kappa, r.m, r.model, 0, 0, 0});
    auto& s = out.back();
    ++s.n;
    s.mean_abs_error += r.abs_error;
    s.mean_estimate += r.ate_estimate;
  }
  for (auto& s : out) {
    s.mean_abs_error /= static_cast<double>(s.n);
    s.mean_estimate /= static_cast<double>(s.n);
  }
  return out;
}

const CellSummary& find_cell(const std::vector<CellSummary>& cells, ModelVariant model,
                             double gamma, double rho, double delta, double kappa, std::size_t m) {
  for (const auto& c : cells)
    if (c.model == model && c.gamma == gamma && c.rho == rho && c.delta == delta &&
        c.kappa == kappa && (m == 0 || c.m == m))
      return c;
  throw Error("no summary cell for " + to_string(model));
}

}  // namespace sthcm
