#pragma once

// Exact finite-m vs collapsed (m -> infinity) macro-history distributions on a
// small Bernoulli/Binomial hierarchical model.
//
// Per unit i and step t the q-variable is a deterministic lookup
//   q_{i,t} = table[i][U_i][X_{i,t-1}][neighbor value]
// with X_{.,-1} = 0. Unit 0 reads unit 1's previous value; unit 1 reads unit
// 0's current value (contemporaneous) or previous value. m subunits are drawn
// Bernoulli(q) and the unit-level variable is X_{i,t} ~ Bernoulli(r(k/m)) with
// readout r(p) = p or p^2. The collapsed model uses r(q) directly.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "sthcm/core_data.hpp"

namespace sthcm {

enum class Readout { Linear, Square };

struct CollapseToyModel {
  using QTable = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

  std::size_t n_units = 1;
  std::size_t t_steps = 1;
  Readout readout = Readout::Square;
  double p_u = 0.5;
  /// [unit][u][previous own value][neighbor value]; for one unit the
  /// neighbor index is always 0.
  QTable q_table{};
  bool contemporaneous = true;

  double q(std::size_t unit, int u, int prev_own, int neighbor) const {
    return q_table[unit][u][prev_own][neighbor];
  }
};

/// Every q entry set to `q`.
CollapseToyModel constant_q_model(std::size_t n_units, std::size_t t_steps, Readout readout,
                                  double q, double p_u = 0.5);

/// Two units, three steps, square readout, non-trivial lookup table.
CollapseToyModel default_collapse_model();

/// Throws InvalidConfig, or StateSpaceTooLarge beyond 2 units x 4 steps.
void validate(const CollapseToyModel& model);

/// Subunit count; nullopt means the collapsed (infinite-m) model.
using SubunitCount = std::optional<std::size_t>;

/// P(X = 1 | q) after marginalizing the m subunits (or r(q) when collapsed).
double unit_success_probability(Readout readout, double q, SubunitCount m);

/// Probability of every macro-history. Index bit (t * n_units + i) holds X_{i,t}.
struct HistoryDistribution {
  std::size_t n_units = 0;
  std::size_t t_steps = 0;
  std::vector<double> probs;

  double total() const;
};

HistoryDistribution exact_history_distribution(const CollapseToyModel& model, SubunitCount m);

/// Same, conditional on a fixed confounder assignment (one entry per unit).
HistoryDistribution conditional_history_distribution(const CollapseToyModel& model,
                                                     SubunitCount m, std::span<const int> u);

/// KL(p || q) in nats over a common support.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// A single temporal chain over a finite state space with a static confounder.
struct TemporalChain {
  std::size_t n_states = 0;
  std::vector<double> confounder_probs;
  /// kernel[c][prev][next]
  std::vector<std::vector<std::vector<double>>> kernel;
  std::size_t initial_state = 0;
};

/// Concatenates every unit of the model into one chain whose state at t is
/// (X_{0,t}, ..., X_{N-1,t}) encoded as sum_i X_{i,t} 2^i, with confounder
/// (U_0, ..., U_{N-1}) and unit-ordered kernel factorization.
TemporalChain build_super_unit(const CollapseToyModel& model, SubunitCount m);

/// Distribution over state sequences, index sum_t s_t * n_states^t, by
/// forward recursion over history prefixes.
std::vector<double> enumerate_chain(const TemporalChain& chain, std::size_t t_steps);

struct CollapseReport {
  std::vector<std::size_t> m_grid;
  std::vector<double> kl_values;  // KL(P_col || P_m), nats
  CollapseToyModel model;
};

CollapseReport kl_curve(const CollapseToyModel& model, std::span<const std::size_t> m_grid);

std::string collapse_csv(const CollapseReport& report);
Json collapse_model_to_json(const CollapseToyModel& model);
/// Missing fields take default_collapse_model() values; unknown fields rejected.
CollapseToyModel collapse_model_from_json(const Json& doc);

}  // namespace sthcm
