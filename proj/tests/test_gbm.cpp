#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sthcm/dgp.hpp"
#include "sthcm/errors.hpp"
#include "sthcm/gbm.hpp"

using namespace sthcm;

namespace {

DesignMatrix one_feature(const std::vector<double>& x, const std::vector<double>& y) {
  return DesignMatrix{x.size(), {"x"}, x, y};
}

struct SplitOracle {
  double best_sse = std::numeric_limits<double>::infinity();
  double threshold = 0;
  std::size_t n_best = 0;  // splits within tolerance of best
  double unsplit_sse = 0;
};

// Every cut between consecutive sorted x values, scored by total within-leaf SSE.
SplitOracle enumerate_splits(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  auto sse = [&](std::size_t lo, std::size_t hi) {
    double m = 0;
    for (std::size_t k = lo; k < hi; ++k) m += y[idx[k]];
    m /= static_cast<double>(hi - lo);
    double s = 0;
    for (std::size_t k = lo; k < hi; ++k) s += (y[idx[k]] - m) * (y[idx[k]] - m);
    return s;
  };
  SplitOracle o;
  o.unsplit_sse = sse(0, x.size());
  std::vector<std::pair<double, double>> cuts;
  for (std::size_t k = 1; k < x.size(); ++k)
    cuts.push_back({sse(0, k) + sse(k, x.size()), (x[idx[k - 1]] + x[idx[k]]) / 2});
  for (auto [s, t] : cuts)
    if (s < o.best_sse) o.best_sse = s;
  for (auto [s, t] : cuts)
    if (s <= o.best_sse + 1e-9) {
      if (o.n_best++ == 0) o.threshold = t;
    }
  return o;
}

double training_sse(const GbmModel& model, const DesignMatrix& d) {
  double s = 0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double e = d.target[r] - gbm_predict(model, d.row(r));
    s += e * e;
  }
  return s;
}

void check_stump(const std::vector<double>& x, const std::vector<double>& y) {
  const GbmHyperparams stump{1, 1, 1, 1.0};
  const auto d = one_feature(x, y);
  const auto model = fit_gbm(d, stump);
  const auto oracle = enumerate_splits(x, y);
  REQUIRE(model.trees.size() == 1);
  const auto& root = model.trees[0].nodes[0];
  if (oracle.unsplit_sse - oracle.best_sse <= 1e-9 * std::max(1.0, oracle.unsplit_sse)) {
    CHECK(root.leaf);
    return;
  }
  REQUIRE_FALSE(root.leaf);
  CHECK(training_sse(model, d) == doctest::Approx(oracle.best_sse).epsilon(1e-9).scale(1.0));
  // Ties resolve to the lowest threshold.
  CHECK(std::abs(root.threshold - oracle.threshold) <= 1e-12 * std::max(1.0, std::abs(oracle.threshold)));
}

}  // namespace

TEST_SUITE("gbm") {
  TEST_CASE("constant target gives a constant model") {
    const auto d = one_feature({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, std::vector<double>(10, 3.5));
    const auto model = fit_gbm(d, {});
    CHECK(model.base_prediction == 3.5);
    for (double x : {-100.0, 0.0, 5.5, 1e6}) CHECK(gbm_predict(model, std::vector<double>{x}) == 3.5);
  }

  TEST_CASE("zero trees predicts the mean") {
    const auto d = one_feature({1, 2, 3, 4}, {1, 2, 3, 6});
    const auto model = fit_gbm(d, {0, 3, 1, 0.1});
    CHECK(model.trees.empty());
    CHECK(gbm_predict(model, std::vector<double>{2}) == 3.0);
  }

  TEST_CASE("depth-1 split matches exhaustive enumeration on 4-point data") {
    std::vector<double> x{0, 1, 2, 3};
    // every integer target pattern over {0..3}^4, under a shuffled x order
    std::mt19937_64 gen(31);
    for (int code = 0; code < 256; ++code) {
      std::vector<double> y(4);
      for (int k = 0; k < 4; ++k) y[k] = (code >> (2 * k)) & 3;
      std::shuffle(x.begin(), x.end(), gen);
      check_stump(x, y);
    }
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 500; ++rep) {
      std::vector<double> xs(4), ys(4);
      for (auto& v : xs) v = z(gen);
      for (auto& v : ys) v = z(gen);
      check_stump(xs, ys);
    }
  }

  TEST_CASE("ties between features go to the lower index") {
    DesignMatrix d{4, {"a", "b"}, {0, 0, 1, 1, 2, 2, 3, 3}, {0, 0, 1, 1}};
    const auto model = fit_gbm(d, {1, 1, 1, 1.0});
    CHECK(model.trees[0].nodes[0].feature == 0);
  }

  TEST_CASE("training loss is nonincreasing in the number of trees") {
    DgpConfig c;
    c.seed = 9;
    const auto data = generate(c);
    const auto d = build_unit_features(data.panel, c.graph.build(), 3, ModelVariant::StHcm);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {0, 1, 2, 5, 10, 25, 50}) {
      const auto s = training_sse(fit_gbm(d, {n, 3, 5, 0.1}), d);
      CHECK(s <= prev + 1e-9);
      prev = s;
    }
  }

  TEST_CASE("leaves respect the minimum sample count") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    std::vector<double> x(2 * 60), y(60);
    for (auto& v : x) v = z(gen);
    for (auto& v : y) v = z(gen);
    DesignMatrix d{60, {"a", "b"}, x, y};
    const auto model = fit_gbm(d, {20, 4, 7, 0.3});
    for (const auto& tree : model.trees)
      for (const auto& node : tree.nodes)
        if (node.leaf) CHECK(node.n_samples >= 7);
  }

  TEST_CASE("input validation") {
    const auto d = one_feature({1, 2, 3}, {1, 2, 3});
    CHECK_THROWS_AS(fit_gbm(d, {10, 3, 2, 0.1}), TooFewRows);
    const auto ok = one_feature({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(fit_gbm(ok, {10, 3, 1, 0.0}), InvalidConfig);
    CHECK_THROWS_AS(fit_gbm(ok, {10, 3, 1, 1.5}), InvalidConfig);
  }

  TEST_CASE("per-unit ensemble") {
    DgpConfig c;
    c.m_subunits = 10;
    c.seed = 12;
    const auto data = generate(c);
    const auto g = c.graph.build();
    const auto ens = fit_gbm_per_unit(data.panel, g, ModelVariant::StHcm, {10, 2, 5, 0.1});
    CHECK(ens.models.size() == 16);
    CHECK(ens.models[0].n_features == 3);
    CHECK_THROWS_AS(ens.model_for(16), MissingUnitModel);
    const auto agg = fit_gbm_per_unit(data.panel, g, ModelVariant::Aggregated, {10, 2, 5, 0.1});
    CHECK(agg.models.size() == 1);
  }
}
