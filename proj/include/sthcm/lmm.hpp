#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sthcm/core_data.hpp"
#include "sthcm/features.hpp"

namespace sthcm {

/// Pooled fixed-effects linear fit
///   Y_ij,t = alpha_i + beta_a A_ij,t + beta_temp Ybar_i,t-1 [+ rho Ybar_N(i),t-1]
/// Aggregated fits carry one global intercept in alpha[0].
struct LmmFit {
  ModelVariant variant = ModelVariant::StHcm;
  std::vector<double> alpha;
  double beta_a = 0.0;
  double beta_temp = 0.0;
  std::optional<double> rho_hat;
  double residual_sd = 0.0;

  bool global_intercept() const { return variant == ModelVariant::Aggregated; }
  /// Throws MissingUnitModel for a unit without an intercept.
  double intercept(std::size_t unit) const;
  double predict(std::size_t unit, double treatment, double own_lag, double neighbor_lag) const;

  bool operator==(const LmmFit&) const = default;
};

LmmFit fit_lmm(const PanelDataset& panel, const SpatialGraph& graph, ModelVariant variant);

Json lmm_to_json(const LmmFit& fit);
LmmFit lmm_from_json(const Json& doc);

}  // namespace sthcm
