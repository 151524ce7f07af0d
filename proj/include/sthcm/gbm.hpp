#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sthcm/core_data.hpp"
#include "sthcm/features.hpp"
#include "sthcm/linalg.hpp"

namespace sthcm {

struct GbmHyperparams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 5;
  double learning_rate = 0.1;
};

/// Axis-aligned binary regression tree; x[feature] <= threshold goes left.
struct RegressionTree {
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;
    std::size_t n_samples = 0;
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

/// Squared-error gradient boosting:
///   prediction(x) = base_prediction + learning_rate * sum_k tree_k(x)
struct GbmModel {
  double base_prediction = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  GbmHyperparams hyperparams;
  std::size_t n_features = 0;
};

/// Greedy exhaustive splits; ties go to the lowest feature index, then the
/// lowest threshold. Throws TooFewRows when rows < 2 * min_samples_leaf.
GbmModel fit_gbm(const DesignMatrix& features, const GbmHyperparams& hyperparams);

double gbm_predict(const GbmModel& model, std::span<const double> row);

/// One model per unit (subunit-level variants) or one pooled model (Aggregated).
struct GbmEnsemble {
  ModelVariant variant = ModelVariant::StHcm;
  std::vector<GbmModel> models;

  /// Throws MissingUnitModel.
  const GbmModel& model_for(std::size_t unit) const;
};

GbmEnsemble fit_gbm_per_unit(const PanelDataset& panel, const SpatialGraph& graph,
                             ModelVariant variant, const GbmHyperparams& hyperparams);

}  // namespace sthcm
