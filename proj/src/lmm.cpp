#include "sthcm/lmm.hpp"

#include <cmath>

#include "sthcm/errors.hpp"

namespace sthcm {

double LmmFit::intercept(std::size_t unit) const {
  if (global_intercept()) {
    if (alpha.size() != 1) throw MissingUnitModel(unit);
    return alpha.front();
  }
  if (unit >= alpha.size()) throw MissingUnitModel(unit);
  return alpha[unit];
}

double LmmFit::predict(std::size_t unit, double treatment, double own_lag,
                       double neighbor_lag) const {
  double y = intercept(unit) + beta_a * treatment + beta_temp * own_lag;
  if (rho_hat) y += *rho_hat * neighbor_lag;
  return y;
}

LmmFit fit_lmm(const PanelDataset& panel, const SpatialGraph& graph, ModelVariant variant) {
  const auto design = build_features(panel, graph, variant);
  const auto coef = solve_least_squares(design);
  const auto resid = residuals(design, coef);

  LmmFit fit;
  fit.variant = variant;
  std::size_t k = 0;
  if (variant == ModelVariant::Aggregated) {
    fit.alpha = {coef[k++]};
  } else {
    fit.alpha.assign(coef.begin(), coef.begin() + static_cast<std::ptrdiff_t>(panel.n_units()));
    k = panel.n_units();
  }
  fit.beta_a = coef[k++];
  fit.beta_temp = coef[k++];
  if (uses_spatial_lag(variant)) fit.rho_hat = coef[k++];

  double ss = 0;
  for (double r : resid) ss += r * r;
  fit.residual_sd = std::sqrt(ss / static_cast<double>(resid.size()));
  return fit;
}

Json lmm_to_json(const LmmFit& fit) {
  Json doc{{"variant", to_string(fit.variant)},
           {"alpha", fit.alpha},
           {"beta_a", fit.beta_a},
           {"beta_temp", fit.beta_temp}};
  if (fit.rho_hat) doc["rho_hat"] = *fit.rho_hat;
  doc["residual_sd"] = fit.residual_sd;
  return doc;
}

LmmFit lmm_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("fit JSON must be an object");
  auto number = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_number()) throw ParseError(std::string("fit JSON needs numeric '") + key + "'");
    return doc[key].get<double>();
  };
  for (const auto& [key, _] : doc.items())
    if (key != "variant" && key != "alpha" && key != "beta_a" && key != "beta_temp" &&
        key != "rho_hat" && key != "residual_sd")
      throw ParseError("unknown fit field '" + key + "'");
  if (!doc.contains("variant") || !doc["variant"].is_string()) throw ParseError("fit JSON needs 'variant'");
  if (!doc.contains("alpha") || !doc["alpha"].is_array()) throw ParseError("fit JSON needs 'alpha' array");

  LmmFit fit;
  fit.variant = parse_variant(doc["variant"].get<std::string>());
  for (const auto& a : doc["alpha"]) {
    if (!a.is_number()) throw ParseError("'alpha' entries must be numbers");
    fit.alpha.push_back(a.get<double>());
  }
  fit.beta_a = number("beta_a");
  fit.beta_temp = number("beta_temp");
  if (doc.contains("rho_hat")) fit.rho_hat = number("rho_hat");
  fit.residual_sd = number("residual_sd");

  if (fit.variant == ModelVariant::Aggregated && fit.alpha.size() != 1)
    throw ParseError("Aggregated fit has exactly one intercept");
  if (fit.variant == ModelVariant::THcm && fit.rho_hat)
    throw ParseError("T-HCM fit has no spatial coefficient");
  if (fit.variant == ModelVariant::StHcm && !fit.rho_hat)
    throw ParseError("ST-HCM fit needs 'rho_hat'");
  return fit;
}

}  // namespace sthcm
