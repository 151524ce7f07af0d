#pragma once

// Domain types shared by every module: the unit adjacency graph, the
// rectangular (unit, subunit, time) panel, and the generator configuration.
//
// Time is 0-based everywhere: t = 0 is the first observed step and its lagged
// quantities take the convention value 0.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sthcm {

using Json = nlohmann::json;

/// Undirected unit adjacency. The global order required for contemporaneous
/// effects is ascending unit index.
class SpatialGraph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  SpatialGraph() = default;

  /// Edges may be listed in either direction or duplicated; they are stored
  /// symmetrically. Throws SelfLoop / IndexOutOfRange.
  SpatialGraph(std::size_t n_units, std::span<const Edge> edges);

  std::size_t n_units() const { return neighbors_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t unit) const { return neighbors_.at(unit); }
  std::size_t degree(std::size_t unit) const { return neighbors_.at(unit).size(); }

  /// Each undirected edge once, as (lo, hi), sorted.
  std::vector<Edge> edges() const;

  bool operator==(const SpatialGraph&) const = default;

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Rook-adjacency lattice; unit index = row * cols + col.
SpatialGraph grid_graph(std::size_t rows, std::size_t cols);

/// Complete (unit, subunit, time) grid of binary treatments and finite outcomes.
class PanelDataset {
 public:
  PanelDataset() = default;
  PanelDataset(std::size_t n_units, std::size_t m_subunits, std::size_t t_steps);

  std::size_t n_units() const { return n_units_; }
  std::size_t m_subunits() const { return m_subunits_; }
  std::size_t t_steps() const { return t_steps_; }
  std::size_t size() const { return outcome_.size(); }

  int treatment(std::size_t unit, std::size_t subunit, std::size_t t) const {
    return treatment_[index(unit, subunit, t)];
  }
  double outcome(std::size_t unit, std::size_t subunit, std::size_t t) const {
    return outcome_[index(unit, subunit, t)];
  }

  /// Throws NonBinaryTreatment (line 0) for treatment outside {0,1}.
  void set(std::size_t unit, std::size_t subunit, std::size_t t, int treatment, double outcome);

  /// Outcomes of all subunits of one unit at one step, in subunit order.
  std::span<const double> unit_outcomes(std::size_t unit, std::size_t t) const {
    return {outcome_.data() + index(unit, 0, t), m_subunits_};
  }
  std::span<const std::uint8_t> unit_treatments(std::size_t unit, std::size_t t) const {
    return {treatment_.data() + index(unit, 0, t), m_subunits_};
  }

  bool operator==(const PanelDataset&) const = default;

 private:
  std::size_t index(std::size_t unit, std::size_t subunit, std::size_t t) const {
    return (t * n_units_ + unit) * m_subunits_ + subunit;
  }

  std::size_t n_units_ = 0;
  std::size_t m_subunits_ = 0;
  std::size_t t_steps_ = 0;
  std::vector<std::uint8_t> treatment_;
  std::vector<double> outcome_;
};

/// Either a rows x cols lattice or an explicit edge list.
struct GraphSpec {
  std::size_t rows = 4;
  std::size_t cols = 4;
  std::optional<SpatialGraph> explicit_graph;

  SpatialGraph build() const;
  std::size_t n_units() const;
  bool operator==(const GraphSpec&) const = default;
};

struct DgpConfig {
  std::size_t n_units = 16;
  std::size_t m_subunits = 50;
  std::size_t t_steps = 8;
  double gamma = 2.0;      // confounding strength
  double rho = 1.5;        // spatial spillover strength
  double beta_a = 5.0;     // true treatment coefficient
  double beta_temp = 0.5;  // own temporal lag coefficient
  double noise_sd = 2.0;
  double delta = 0.0;      // confounder drift
  double kappa = 0.0;      // contemporaneous noise cyclicity
  std::uint64_t seed = 0;
  GraphSpec graph;

  bool operator==(const DgpConfig&) const = default;
};

/// Throws InvalidConfig naming the first offending field.
void validate(const DgpConfig& config);

struct DgpOutput {
  PanelDataset panel;
  /// latent_u[t][unit]; diagnostics only, never read by estimators.
  std::vector<std::vector<double>> latent_u;
  DgpConfig config;
};

// ---- file formats ----------------------------------------------------------

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path);
PanelDataset load_panel_csv(const std::filesystem::path& path);
/// Same parser over an in-memory document (used by load_panel_csv).
PanelDataset parse_panel_csv(std::istream& in);

void write_latent_csv(const DgpOutput& output, const std::filesystem::path& path);

Json graph_to_json(const SpatialGraph& graph);
SpatialGraph graph_from_json(const Json& doc);
void write_graph_json(const SpatialGraph& graph, const std::filesystem::path& path);
SpatialGraph load_graph_json(const std::filesystem::path& path);

/// Unknown fields are rejected with InvalidConfig.
Json config_to_json(const DgpConfig& config);
DgpConfig config_from_json(const Json& doc);

}  // namespace sthcm
