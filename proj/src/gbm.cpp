#include "sthcm/gbm.hpp"

#include <algorithm>
#include <numeric>

#include "sthcm/errors.hpp"

namespace sthcm {

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes[k].leaf) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
  return nodes[k].value;
}

namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const DesignMatrix& x, std::span<const double> residual, const GbmHyperparams& hp)
      : x_(x), residual_(residual), hp_(hp) {}

  RegressionTree build() {
    std::vector<std::size_t> rows(x_.rows);
    std::iota(rows.begin(), rows.end(), 0);
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::size_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    double sum = 0;
    for (auto r : rows) sum += residual_[r];
    tree_.nodes[id].value = sum / static_cast<double>(rows.size());
    tree_.nodes[id].n_samples = rows.size();

    if (depth >= hp_.max_depth) return id;
    const Split split = best_split(rows, sum);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_.at(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[id].leaf = false;
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& rows, double total) const {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(hp_.min_samples_leaf, 1);
    Split best;
    if (n < 2 * min_leaf) return best;

    double node_ss = 0;
    for (auto r : rows) node_ss += residual_[r] * residual_[r];
    const double parent = total * total / static_cast<double>(n);
    // Gains at round-off level are not real structure.
    const double min_gain = 1e-12 * std::max(node_ss, 1e-300);

    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_.at(a, f) < x_.at(b, f); });
      double left_sum = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += residual_[order[k]];
        const std::size_t n_left = k + 1;
        const std::size_t n_right = n - n_left;
        const double lo = x_.at(order[k], f);
        const double hi = x_.at(order[k + 1], f);
        if (lo == hi || n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - parent;
        if (gain > min_gain && (!best.found || gain > best.gain)) {
          best.found = true;
          best.feature = f;
          best.threshold = lo + (hi - lo) / 2;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const DesignMatrix& x_;
  std::span<const double> residual_;
  const GbmHyperparams& hp_;
  RegressionTree tree_;
};

}  // namespace

GbmModel fit_gbm(const DesignMatrix& features, const GbmHyperparams& hp) {
  features.check();
  if (!(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0))
    throw InvalidConfig("learning_rate", "must lie in (0, 1]");
  if (hp.min_samples_leaf < 1) throw InvalidConfig("min_samples_leaf", "must be >= 1");
  const std::size_t needed = 2 * hp.min_samples_leaf;
  if (features.rows < needed) throw TooFewRows(features.rows, needed);

  GbmModel model;
  model.hyperparams = hp;
  model.learning_rate = hp.learning_rate;
  model.n_features = features.cols();
  double sum = 0;
  for (double y : features.target) sum += y;
  model.base_prediction = sum / static_cast<double>(features.rows);

  std::vector<double> fitted(features.rows, model.base_prediction);
  std::vector<double> residual(features.rows);
  for (std::size_t k = 0; k < hp.n_trees; ++k) {
    for (std::size_t r = 0; r < features.rows; ++r) residual[r] = features.target[r] - fitted[r];
    auto tree = TreeBuilder(features, residual, hp).build();
    for (std::size_t r = 0; r < features.rows; ++r)
      fitted[r] += hp.learning_rate * tree.predict(features.row(r));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double gbm_predict(const GbmModel& model, std::span<const double> row) {
  if (row.size() != model.n_features) throw Error("feature vector has the wrong length");
  double s = 0;
  for (const auto& tree : model.trees) s += tree.predict(row);
  return model.base_prediction + model.learning_rate * s;
}

const GbmModel& GbmEnsemble::model_for(std::size_t unit) const {
  if (variant == ModelVariant::Aggregated) {
    if (models.size() != 1) throw MissingUnitModel(unit);
    return models.front();
  }
  if (unit >= models.size()) throw MissingUnitModel(unit);
  return models[unit];
}

GbmEnsemble fit_gbm_per_unit(const PanelDataset& panel, const SpatialGraph& graph,
                             ModelVariant variant, const GbmHyperparams& hyperparams) {
  GbmEnsemble ensemble;
  ensemble.variant = variant;
  const std::size_t n_models = variant == ModelVariant::Aggregated ? 1 : panel.n_units();
  for (std::size_t i = 0; i < n_models; ++i)
    ensemble.models.push_back(fit_gbm(build_unit_features(panel, graph, i, variant), hyperparams));
  return ensemble;
}

}  // namespace sthcm
