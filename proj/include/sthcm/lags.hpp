#pragma once

// Lag conventions shared by the generator, the feature builders and the
// G-computation simulator. Everything that needs a unit mean or a neighbor
// mean goes through these functions so all three agree bit for bit.
//
//   own lag at t       = mean over subunits of unit i at t-1   (0 at t = 0)
//   neighbor lag at t  = unweighted mean of neighbor unit means at t-1
//                        (0 at t = 0 or when the unit has no neighbors)

#include <cstddef>
#include <span>
#include <vector>

#include "sthcm/core_data.hpp"

namespace sthcm {

inline double subunit_mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

inline double neighbor_mean(const SpatialGraph& graph, std::size_t unit,
                            std::span<const double> unit_means) {
  const auto& nbrs = graph.neighbors(unit);
  if (nbrs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k : nbrs) sum += unit_means[k];
  return sum / static_cast<double>(nbrs.size());
}

/// Per-(unit, t) subunit means of a panel, stored t-major.
class UnitMeans {
 public:
  explicit UnitMeans(const PanelDataset& panel)
      : n_units_(panel.n_units()), means_(panel.n_units() * panel.t_steps()) {
    for (std::size_t t = 0; t < panel.t_steps(); ++t)
      for (std::size_t i = 0; i < n_units_; ++i)
        means_[t * n_units_ + i] = subunit_mean(panel.unit_outcomes(i, t));
  }

  double at(std::size_t unit, std::size_t t) const { return means_[t * n_units_ + unit]; }

  /// All unit means at step t.
  std::span<const double> step(std::size_t t) const {
    return {means_.data() + t * n_units_, n_units_};
  }

  double own_lag(std::size_t unit, std::size_t t) const { return t == 0 ? 0.0 : at(unit, t - 1); }

  double neighbor_lag(const SpatialGraph& graph, std::size_t unit, std::size_t t) const {
    return t == 0 ? 0.0 : neighbor_mean(graph, unit, step(t - 1));
  }

 private:
  std::size_t n_units_;
  std::vector<double> means_;
};

}  // namespace sthcm
