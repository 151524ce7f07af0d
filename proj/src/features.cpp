#include "sthcm/features.hpp"

#include <algorithm>
#include <cctype>

#include "sthcm/errors.hpp"
#include "sthcm/lags.hpp"

namespace sthcm {

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Aggregated: return "Aggregated";
    case ModelVariant::THcm: return "T-HCM";
    case ModelVariant::StHcm: return "ST-HCM";
  }
  return "?";
}

ModelVariant parse_variant(std::string_view text) {
  std::string key;
  for (char c : text) key.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(c)));
  if (key == "aggregated") return ModelVariant::Aggregated;
  if (key == "t-hcm") return ModelVariant::THcm;
  if (key == "st-hcm") return ModelVariant::StHcm;
  throw InvalidConfig("variant", "unknown model variant '" + std::string(text) + "'");
}

namespace {

void check_inputs(const PanelDataset& panel, const SpatialGraph& graph) {
  if (graph.n_units() != panel.n_units())
    throw InvalidConfig("graph", "graph has " + std::to_string(graph.n_units()) +
                                     " units, panel has " + std::to_string(panel.n_units()));
  if (panel.t_steps() < 2) throw TooShortPanel(panel.t_steps());
}

}  // namespace

DesignMatrix build_features(const PanelDataset& panel, const SpatialGraph& graph,
                            ModelVariant variant) {
  check_inputs(panel, graph);
  const std::size_t n = panel.n_units();
  const std::size_t m = panel.m_subunits();
  const std::size_t T = panel.t_steps();
  const UnitMeans means(panel);

  DesignMatrix d;
  if (variant == ModelVariant::Aggregated) {
    d.columns = {"intercept", "A_mean", "own_lag", "neighbor_lag"};
    d.rows = n * (T - 1);
    d.values.reserve(d.rows * 4);
    for (std::size_t t = 1; t < T; ++t)
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t treated = 0;
        for (auto a : panel.unit_treatments(i, t)) treated += a;
        d.values.insert(d.values.end(), {1.0, static_cast<double>(treated) / static_cast<double>(m),
                                         means.own_lag(i, t), means.neighbor_lag(graph, i, t)});
        d.target.push_back(means.at(i, t));
      }
    return d;
  }

  const bool spatial = uses_spatial_lag(variant);
  for (std::size_t i = 0; i < n; ++i) d.columns.push_back("alpha[" + std::to_string(i) + "]");
  d.columns.push_back("A");
  d.columns.push_back("own_lag");
  if (spatial) d.columns.push_back("neighbor_lag");
  const std::size_t p = d.columns.size();
  d.rows = n * m * (T - 1);
  d.values.assign(d.rows * p, 0.0);
  d.target.reserve(d.rows);
  std::size_t r = 0;
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      const double own = means.own_lag(i, t);
      const double nbr = means.neighbor_lag(graph, i, t);
      for (std::size_t j = 0; j < m; ++j, ++r) {
        double* row = d.values.data() + r * p;
        row[i] = 1.0;
        row[n] = panel.treatment(i, j, t);
        row[n + 1] = own;
        if (spatial) row[n + 2] = nbr;
        d.target.push_back(panel.outcome(i, j, t));
      }
    }
  return d;
}

std::vector<double> unit_feature_row(ModelVariant variant, double treatment, double own_lag,
                                     double neighbor_lag) {
  if (uses_spatial_lag(variant)) return {treatment, own_lag, neighbor_lag};
  return {treatment, own_lag};
}

DesignMatrix build_unit_features(const PanelDataset& panel, const SpatialGraph& graph,
                                 std::size_t unit, ModelVariant variant) {
  check_inputs(panel, graph);
  if (variant == ModelVariant::Aggregated) {
    auto pooled = build_features(panel, graph, variant);
    DesignMatrix d;
    d.columns.assign(pooled.columns.begin() + 1, pooled.columns.end());
    d.rows = pooled.rows;
    d.target = pooled.target;
    for (std::size_t r = 0; r < pooled.rows; ++r) {
      const auto row = pooled.row(r);
      d.values.insert(d.values.end(), row.begin() + 1, row.end());
    }
    return d;
  }
  if (unit >= panel.n_units()) throw MissingUnitModel(unit);
  const UnitMeans means(panel);
  DesignMatrix d;
  d.columns = {"A", "own_lag"};
  if (uses_spatial_lag(variant)) d.columns.push_back("neighbor_lag");
  for (std::size_t t = 1; t < panel.t_steps(); ++t) {
    const double own = means.own_lag(unit, t);
    const double nbr = means.neighbor_lag(graph, unit, t);
    for (std::size_t j = 0; j < panel.m_subunits(); ++j) {
      const auto row = unit_feature_row(variant, panel.treatment(unit, j, t), own, nbr);
      d.values.insert(d.values.end(), row.begin(), row.end());
      d.target.push_back(panel.outcome(unit, j, t));
      ++d.rows;
    }
  }
  return d;
}

}  // namespace sthcm
