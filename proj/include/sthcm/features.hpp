#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "sthcm/core_data.hpp"
#include "sthcm/linalg.hpp"

namespace sthcm {

/// Structural model variants.
///   Aggregated: unit-time means, one global intercept, no unit terms.
///   THcm:       subunit rows, unit intercepts, own temporal lag.
///   StHcm:      THcm plus the neighbor (spatial) lag.
enum class ModelVariant { Aggregated, THcm, StHcm };

std::string to_string(ModelVariant v);
/// Accepts "Aggregated", "T-HCM", "ST-HCM" (case-insensitive, '_' for '-').
ModelVariant parse_variant(std::string_view text);

inline bool uses_spatial_lag(ModelVariant v) { return v != ModelVariant::THcm; }

/// Pooled regression design, one row per (unit, subunit, t >= 1) for the
/// subunit-level variants and per (unit, t >= 1) for Aggregated. Columns:
///   ST-HCM:     alpha[0..n), A, own_lag, neighbor_lag
///   T-HCM:      alpha[0..n), A, own_lag
///   Aggregated: intercept, A_mean, own_lag, neighbor_lag
/// Throws TooShortPanel when t_steps < 2.
DesignMatrix build_features(const PanelDataset& panel, const SpatialGraph& graph,
                            ModelVariant variant);

/// Rows of a single unit for a per-unit learner: A, own_lag[, neighbor_lag].
/// For Aggregated this is the pooled unit-time design without the intercept.
DesignMatrix build_unit_features(const PanelDataset& panel, const SpatialGraph& graph,
                                 std::size_t unit, ModelVariant variant);

/// Feature vector in the column order of build_unit_features.
std::vector<double> unit_feature_row(ModelVariant variant, double treatment, double own_lag,
                                     double neighbor_lag);

}  // namespace sthcm
