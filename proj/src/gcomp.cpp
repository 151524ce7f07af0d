#include "sthcm/gcomp.hpp"

#include "sthcm/errors.hpp"
#include "sthcm/lags.hpp"

namespace sthcm {

std::string to_string(GcompMode mode) {
  return mode == GcompMode::Propagate ? "propagate" : "observed-lag";
}

GcompMode parse_mode(std::string_view text) {
  if (text == "propagate") return GcompMode::Propagate;
  if (text == "observed-lag" || text == "observed_lag") return GcompMode::ObservedLag;
  throw InvalidConfig("mode", "expected 'propagate' or 'observed-lag', got '" + std::string(text) + "'");
}

AteEstimate estimate_ate(const UnitPredictor& predict, const std::function<void(std::size_t)>& covers,
                         const PanelDataset& panel, const SpatialGraph& graph, std::size_t horizon,
                         GcompMode mode, PolicyPair policies) {
  if (horizon < 1 || horizon > panel.t_steps()) throw HorizonOutOfRange(horizon, panel.t_steps());
  if (graph.n_units() != panel.n_units())
    throw InvalidConfig("graph", "graph and panel disagree on the number of units");
  const std::size_t n = panel.n_units();
  for (std::size_t i = 0; i < n; ++i) covers(i);

  const UnitMeans observed(panel);
  auto roll_out = [&](std::size_t unit, double treatment) {
    double simulated_lag = 0.0;
    double y = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const double own = mode == GcompMode::Propagate ? simulated_lag : observed.own_lag(unit, t);
      y = predict(unit, treatment, own, observed.neighbor_lag(graph, unit, t));
      simulated_lag = y;
    }
    return y;
  };

  AteEstimate est;
  est.mode = mode;
  est.horizon = horizon;
  est.per_unit_final.reserve(n);
  double sum1 = 0, sum0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y1 = roll_out(i, policies.treated);
    const double y0 = roll_out(i, policies.control);
    est.per_unit_final.emplace_back(y1, y0);
    sum1 += y1;
    sum0 += y0;
  }
  est.mean_do1 = sum1 / static_cast<double>(n);
  est.mean_do0 = sum0 / static_cast<double>(n);
  est.ate = est.mean_do1 - est.mean_do0;
  return est;
}

AteEstimate estimate_ate(const LmmFit& fit, const PanelDataset& panel, const SpatialGraph& graph,
                         std::size_t horizon, GcompMode mode, PolicyPair policies) {
  return estimate_ate(
      [&fit](std::size_t i, double a, double own, double nbr) { return fit.predict(i, a, own, nbr); },
      [&fit](std::size_t i) { (void)fit.intercept(i); }, panel, graph, horizon, mode, policies);
}

AteEstimate estimate_ate(const GbmEnsemble& models, const PanelDataset& panel,
                         const SpatialGraph& graph, std::size_t horizon, GcompMode mode,
                         PolicyPair policies) {
  return estimate_ate(
      [&models](std::size_t i, double a, double own, double nbr) {
        return gbm_predict(models.model_for(i), unit_feature_row(models.variant, a, own, nbr));
      },
      [&models](std::size_t i) { (void)models.model_for(i); }, panel, graph, horizon, mode,
      policies);
}

Json ate_to_json(const AteEstimate& e) {
  Json per_unit = Json::array();
  for (const auto& [y1, y0] : e.per_unit_final) per_unit.push_back({{"do1", y1}, {"do0", y0}});
  return Json{{"ate", e.ate},           {"mean_do1", e.mean_do1}, {"mean_do0", e.mean_do0},
              {"per_unit_final", per_unit}, {"mode", to_string(e.mode)}, {"horizon", e.horizon}};
}

}  // namespace sthcm
