#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sthcm/core_data.hpp"
#include "sthcm/gbm.hpp"
#include "sthcm/lmm.hpp"

namespace sthcm {

/// How the unit's own lag is fed during simulation.
///   Propagate:   the previous simulated prediction (recursive roll-out).
///   ObservedLag: the observed unit mean at t-1.
/// Neighbor lags always come from the observed panel.
enum class GcompMode { Propagate, ObservedLag };

std::string to_string(GcompMode mode);
GcompMode parse_mode(std::string_view text);

struct AteEstimate {
  double ate = 0.0;
  double mean_do1 = 0.0;
  double mean_do0 = 0.0;
  /// (final outcome under treated policy, under control policy) per unit.
  std::vector<std::pair<double, double>> per_unit_final;
  GcompMode mode = GcompMode::ObservedLag;
  std::size_t horizon = 0;
};

/// Treatment values assigned to every subunit by the two arms.
struct PolicyPair {
  double treated = 1.0;
  double control = 0.0;
};

/// unit, treatment, own lag, neighbor lag -> predicted unit outcome.
using UnitPredictor = std::function<double(std::size_t, double, double, double)>;

/// Simulates both policies for every unit up to `horizon` (1-based, at most
/// t_steps) and averages final outcomes over units. `covers(unit)` must throw
/// MissingUnitModel for units the predictor cannot serve.
AteEstimate estimate_ate(const UnitPredictor& predict, const std::function<void(std::size_t)>& covers,
                         const PanelDataset& panel, const SpatialGraph& graph, std::size_t horizon,
                         GcompMode mode, PolicyPair policies = {});

AteEstimate estimate_ate(const LmmFit& fit, const PanelDataset& panel, const SpatialGraph& graph,
                         std::size_t horizon, GcompMode mode, PolicyPair policies = {});

AteEstimate estimate_ate(const GbmEnsemble& models, const PanelDataset& panel,
                         const SpatialGraph& graph, std::size_t horizon, GcompMode mode,
                         PolicyPair policies = {});

Json ate_to_json(const AteEstimate& estimate);

}  // namespace sthcm
