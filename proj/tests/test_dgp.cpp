#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sthcm/dgp.hpp"
#include "sthcm/errors.hpp"
#include "sthcm/lags.hpp"
#include "sthcm/rng.hpp"

using namespace sthcm;

namespace {

// E[f(Z)], Z ~ N(0,1), by the trapezoid rule on a wide grid.
template <class F>
double normal_expectation(F f) {
  const double h = 1e-3;
  double sum = 0.0;
  for (double z = -12.0; z <= 12.0; z += h)
    sum += f(z) * std::exp(-0.5 * z * z);
  return sum * h / std::sqrt(2.0 * std::numbers::pi);
}

double treated_fraction(const DgpOutput& out) {
  double s = 0;
  const auto& p = out.panel;
  for (std::size_t t = 0; t < p.t_steps(); ++t)
    for (std::size_t i = 0; i < p.n_units(); ++i)
      for (auto a : p.unit_treatments(i, t)) s += a;
  return s / static_cast<double>(p.size());
}

}  // namespace

TEST_SUITE("dgp") {
  TEST_CASE("rng streams are deterministic and distinct") {
    RngStream a(7, 1), b(7, 1), c(7, 2), d(8, 1);
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
    CHECK(derive_seed(1, "grid", 3) == derive_seed(1, "grid", 3));
    CHECK(derive_seed(1, "grid", 3) != derive_seed(1, "grid", 4));
    CHECK(derive_seed(1, "grid", 3) != derive_seed(1, "consistency", 3));
  }

  TEST_CASE("rng normal moments") {
    RngStream r(123, 9);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      const double z = r.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    RngStream u(5, 5);
    for (int k = 0; k < 10000; ++k) {
      const double v = u.uniform();
      CHECK_UNARY(v > 0.0);
      CHECK_UNARY(v < 1.0);
    }
  }

  TEST_CASE("output shape and determinism") {
    DgpConfig c;
    c.seed = 42;
    const auto a = generate(c);
    const auto b = generate(c);
    CHECK(a.panel.size() == 16u * 50u * 8u);
    CHECK(a.latent_u.size() == 8);
    CHECK(a.panel == b.panel);
    CHECK(a.latent_u == b.latent_u);
    c.seed = 43;
    CHECK_FALSE(generate(c).panel == a.panel);
  }

  TEST_CASE("without confounding the treated fraction is sigmoid(-0.5)") {
    DgpConfig c;
    c.gamma = 0.0;
    c.m_subunits = 200;
    c.seed = 3;
    const double expected = 1.0 / (1.0 + std::exp(0.5));
    CHECK(std::abs(treated_fraction(generate(c)) - expected) < 0.02);
  }

  TEST_CASE("with confounding the treated fraction matches the quadrature oracle") {
    const double expected = normal_expectation([](double z) { return 1.0 / (1.0 + std::exp(-(2.0 * z - 0.5))); });
    CHECK(expected == doctest::Approx(0.42475746825855).epsilon(1e-9));
    DgpConfig c;
    c.n_units = 400;
    c.graph = GraphSpec{20, 20, std::nullopt};
    c.m_subunits = 50;
    c.t_steps = 2;
    double total = 0;
    const int reps = 5;
    for (int s = 0; s < reps; ++s) {
      c.seed = 100 + s;
      total += treated_fraction(generate(c));
    }
    CHECK(std::abs(total / reps - expected) < 0.02);
  }

  TEST_CASE("noiseless and unconfounded outcomes are exactly beta_a * A") {
    DgpConfig c;
    c.gamma = 0;
    c.rho = 0;
    c.beta_temp = 0;
    c.noise_sd = 0;
    c.seed = 11;
    const auto out = generate(c);
    const auto& p = out.panel;
    for (std::size_t t = 0; t < p.t_steps(); ++t)
      for (std::size_t i = 0; i < p.n_units(); ++i)
        for (std::size_t j = 0; j < p.m_subunits(); ++j)
          CHECK(p.outcome(i, j, t) == 5.0 * p.treatment(i, j, t));
  }

  TEST_CASE("noiseless outcomes follow the structural equation") {
    DgpConfig c;
    c.noise_sd = 0;
    c.m_subunits = 4;
    c.seed = 5;
    const auto out = generate(c);
    const auto graph = c.graph.build();
    const UnitMeans means(out.panel);
    for (std::size_t t = 0; t < c.t_steps; ++t)
      for (std::size_t i = 0; i < c.n_units; ++i)
        for (std::size_t j = 0; j < c.m_subunits; ++j) {
          const double expected = c.gamma * out.latent_u[t][i] + 5.0 * out.panel.treatment(i, j, t) +
                                  0.5 * means.own_lag(i, t) + 1.5 * means.neighbor_lag(graph, i, t);
          CHECK(out.panel.outcome(i, j, t) == doctest::Approx(expected).epsilon(1e-12));
        }
  }

  TEST_CASE("confounder drift") {
    DgpConfig c;
    c.seed = 8;
    const auto still = generate(c);
    for (std::size_t t = 1; t < c.t_steps; ++t) CHECK(still.latent_u[t] == still.latent_u[0]);

    c.delta = 0.5;
    const auto moving = generate(c);
    CHECK_FALSE(moving.latent_u[1] == moving.latent_u[0]);
    // Increments have sd delta.
    double s2 = 0;
    std::size_t n = 0;
    for (std::size_t t = 1; t < c.t_steps; ++t)
      for (std::size_t i = 0; i < c.n_units; ++i, ++n) {
        const double d = moving.latent_u[t][i] - moving.latent_u[t - 1][i];
        s2 += d * d;
      }
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.5).epsilon(0.25));
  }

  TEST_CASE("neighbor noise mixing induces positive correlation") {
    auto noise_corr = [](double kappa) {
      DgpConfig c;
      c.gamma = 0;
      c.rho = 0;
      c.beta_temp = 0;
      c.beta_a = 0;
      c.kappa = kappa;
      c.seed = 21;
      const auto out = generate(c);
      const auto g = c.graph.build();
      double sxy = 0, sxx = 0, mean = 0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < c.t_steps; ++t)
        for (std::size_t j = 0; j < c.m_subunits; ++j)
          for (auto [a, b] : g.edges()) {
            const double x = out.panel.outcome(a, j, t), y = out.panel.outcome(b, j, t);
            sxy += x * y;
            sxx += 0.5 * (x * x + y * y);
            mean += x;
            ++n;
          }
      return std::pair{sxy / sxx, mean / n};
    };
    const auto [c0, m0] = noise_corr(0.0);
    const auto [c1, m1] = noise_corr(1.0);
    CHECK(std::abs(c0) < 0.05);
    CHECK(c1 > 0.2);
    CHECK(std::abs(m0) < 0.1);
    CHECK(std::abs(m1) < 0.2);
  }

  TEST_CASE("switching kappa leaves confounder and treatment draws untouched") {
    DgpConfig c;
    c.seed = 77;
    const auto base = generate(c);
    c.kappa = 0.7;
    const auto mixed = generate(c);
    CHECK(base.latent_u == mixed.latent_u);
    for (std::size_t i = 0; i < c.n_units; ++i)
      for (std::size_t t = 0; t < c.t_steps; ++t) {
        const auto a = base.panel.unit_treatments(i, t);
        const auto b = mixed.panel.unit_treatments(i, t);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
  }

  TEST_CASE("invalid configs name the field") {
    DgpConfig c;
    c.m_subunits = 0;
    try {
      generate(c);
      FAIL("expected InvalidConfig");
    } catch (const InvalidConfig& e) {
      CHECK(e.field == "m_subunits");
    }
    c = DgpConfig{};
    c.t_steps = 0;
    CHECK_THROWS_AS(generate(c), InvalidConfig);
    c = DgpConfig{};
    c.noise_sd = -1;
    CHECK_THROWS_AS(generate(c), InvalidConfig);
  }

  TEST_CASE("oracle ATE without temporal carry-over equals beta_a") {
    DgpConfig c;
    c.beta_temp = 0;
    // The neighbor lag still carries the treatment: only rho = 0 makes it static.
    c.rho = 0;
    const auto o = oracle_ate_detail(c, 8, 20, RngStream(1, 1));
    CHECK(o.ate == doctest::Approx(5.0).epsilon(1e-12));
  }

  TEST_CASE("oracle ATE with temporal carry-over is the geometric sum") {
    DgpConfig c;
    c.rho = 0;
    double expected = 0;
    for (int k = 0; k < 8; ++k) expected += 5.0 * std::pow(0.5, k);
    CHECK(expected == 9.9609375);
    const auto o = oracle_ate_detail(c, 8, 10, RngStream(2, 1));
    CHECK(o.ate == doctest::Approx(expected).epsilon(1e-12));
    // Common random numbers: the paired difference has no noise at all.
    CHECK(o.se_ate < 1e-9);
  }

  TEST_CASE("oracle standard error shrinks like one over root n") {
    DgpConfig c;
    const auto small = oracle_ate_detail(c, 4, 400, RngStream(3, 1));
    const auto large = oracle_ate_detail(c, 4, 1600, RngStream(4, 1));
    CHECK(large.se_do1 / small.se_do1 == doctest::Approx(0.5).epsilon(0.2));
    CHECK_THROWS_AS(oracle_ate(c, 9, 10, RngStream(1, 1)), HorizonOutOfRange);
    CHECK_THROWS_AS(oracle_ate(c, 0, 10, RngStream(1, 1)), HorizonOutOfRange);
  }
}
