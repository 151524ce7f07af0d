#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sthcm/core_data.hpp"
#include "sthcm/features.hpp"
#include "sthcm/gcomp.hpp"

namespace sthcm {

const char* version();

struct ExperimentRow {
  std::string experiment_id;
  double gamma = 0, rho = 0, delta = 0, kappa = 0;
  std::size_t m = 0;
  ModelVariant model = ModelVariant::StHcm;
  GcompMode mode = GcompMode::ObservedLag;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double ate_estimate = 0, target_ate = 0, abs_error = 0;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  Json metadata;
};

struct RunOptions {
  std::size_t workers = 1;
  /// Label mixed into every trial seed; empty selects the experiment's default.
  std::string experiment_id;
  /// Monte-Carlo rollouts behind the propagate-mode target.
  std::size_t oracle_rollouts = 200;
};

enum class RobustnessAxis { Delta, Kappa };

const std::vector<ModelVariant>& all_variants();

/// One generate -> fit -> estimate pass for each requested variant, at
/// horizon = t_steps. The config's own seed drives the draw.
std::vector<double> run_trial(const DgpConfig& config, const std::vector<ModelVariant>& variants,
                              GcompMode mode);

ExperimentTable run_unbiasedness(std::uint64_t base_seed, std::size_t n_trials,
                                 const DgpConfig& config, GcompMode mode, RunOptions options = {});

ExperimentTable run_consistency(std::uint64_t base_seed, const std::vector<std::size_t>& m_grid,
                                std::size_t n_trials_per_m, const DgpConfig& config, GcompMode mode,
                                RunOptions options = {});

ExperimentTable run_grid(std::uint64_t base_seed, const std::vector<double>& gamma_grid,
                         const std::vector<double>& rho_grid, std::size_t n_trials,
                         const DgpConfig& config, GcompMode mode, RunOptions options = {});

ExperimentTable run_robustness(std::uint64_t base_seed, RobustnessAxis axis,
                               const std::vector<double>& value_grid, std::size_t n_trials,
                               const DgpConfig& config, GcompMode mode, RunOptions options = {});

std::string results_csv(const ExperimentTable& table);

/// Mean absolute error and mean estimate per (cell, model), in table order.
struct CellSummary {
  double gamma = 0, rho = 0, delta = 0, kappa = 0;
  std::size_t m = 0;
  ModelVariant model = ModelVariant::StHcm;
  std::size_t n = 0;
  double mean_abs_error = 0;
  double mean_estimate = 0;
};

std::vector<CellSummary> summarize(const ExperimentTable& table);

/// The summary entry for one cell/model; throws Error when absent.
const CellSummary& find_cell(const std::vector<CellSummary>& cells, ModelVariant model,
                             double gamma, double rho, double delta = 0, double kappa = 0,
                             std::size_t m = 0);

}  // namespace sthcm
