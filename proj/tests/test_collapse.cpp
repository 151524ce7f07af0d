#include <doctest.h>

#include <cmath>
#include <vector>

#include "sthcm/collapse.hpp"
#include "sthcm/errors.hpp"

using namespace sthcm;

namespace {

// Binomial pmf by Pascal's rule, no special functions.
std::vector<double> binomial_pmf(std::size_t m, double q) {
  std::vector<double> p{1.0};
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> next(p.size() + 1, 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      next[j] += p[j] * (1 - q);
      next[j + 1] += p[j] * q;
    }
    p = next;
  }
  return p;
}

double readout(Readout r, double p) { return r == Readout::Linear ? p : p * p; }

double success_oracle(Readout r, double q, std::size_t m) {
  const auto pmf = binomial_pmf(m, q);
  double s = 0;
  for (std::size_t k = 0; k <= m; ++k) s += pmf[k] * readout(r, static_cast<double>(k) / m);
  return s;
}

// One unit, two steps, mixture over the confounder, written out by hand.
std::vector<double> one_unit_two_steps(const CollapseToyModel& model, SubunitCount m) {
  auto p1 = [&](double q) {
    return m ? success_oracle(model.readout, q, *m) : readout(model.readout, q);
  };
  std::vector<double> out(4, 0.0);
  for (int u = 0; u < 2; ++u) {
    const double pu = u ? model.p_u : 1 - model.p_u;
    for (int x0 = 0; x0 < 2; ++x0)
      for (int x1 = 0; x1 < 2; ++x1) {
        const double a = p1(model.q(0, u, 0, 0));
        const double b = p1(model.q(0, u, x0, 0));
        out[x0 | (x1 << 1)] += pu * (x0 ? a : 1 - a) * (x1 ? b : 1 - b);
      }
  }
  return out;
}

}  // namespace

TEST_SUITE("collapse") {
  TEST_CASE("unit success probability against the binomial oracle") {
    for (double q : {0.05, 0.3, 0.5, 0.77, 0.99})
      for (std::size_t m : {1, 2, 3, 7, 16, 40}) {
        CHECK(unit_success_probability(Readout::Square, q, m) ==
              doctest::Approx(success_oracle(Readout::Square, q, m)).epsilon(1e-12));
        // second moment of a binomial proportion
        CHECK(unit_success_probability(Readout::Square, q, m) ==
              doctest::Approx(q * q + q * (1 - q) / m).epsilon(1e-12));
        CHECK(unit_success_probability(Readout::Linear, q, m) == doctest::Approx(q).epsilon(1e-12));
      }
    CHECK(unit_success_probability(Readout::Square, 0.3, std::nullopt) == doctest::Approx(0.09));
  }

  TEST_CASE("single step q=0.5 m=2 closed form") {
    const auto model = constant_q_model(1, 1, Readout::Square, 0.5);
    const auto pm = exact_history_distribution(model, 2);
    const auto pc = exact_history_distribution(model, std::nullopt);
    CHECK(pm.probs[1] == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(pc.probs[1] == doctest::Approx(0.25).epsilon(1e-15));
    const double oracle = 0.75 * std::log(0.75 / 0.625) + 0.25 * std::log(0.25 / 0.375);
    const double kl = kl_divergence(pc.probs, pm.probs);
    CHECK(std::abs(kl - oracle) < 1e-15);
    CHECK(std::abs(kl - 0.0353749) < 1e-6);
  }

  TEST_CASE("linear readout has no finite-m error") {
    auto model = default_collapse_model();
    model.readout = Readout::Linear;
    const auto pc = exact_history_distribution(model, std::nullopt);
    for (std::size_t m : {1, 2, 4, 8, 16}) {
      const auto pm = exact_history_distribution(model, m);
      CHECK(std::abs(kl_divergence(pc.probs, pm.probs)) < 1e-12);
    }
  }

  TEST_CASE("hand enumeration of one unit over two steps") {
    CollapseToyModel model = constant_q_model(1, 2, Readout::Square, 0.5, 0.3);
    model.q_table[0][0][0][0] = 0.2;
    model.q_table[0][0][1][0] = 0.6;
    model.q_table[0][1][0][0] = 0.45;
    model.q_table[0][1][1][0] = 0.9;
    for (SubunitCount m : {SubunitCount{}, SubunitCount{3}, SubunitCount{10}}) {
      const auto expected = one_unit_two_steps(model, m);
      const auto got = exact_history_distribution(model, m);
      REQUIRE(got.probs.size() == 4);
      for (int k = 0; k < 4; ++k) CHECK(got.probs[k] == doctest::Approx(expected[k]).epsilon(1e-13));
    }
  }

  TEST_CASE("degenerate confounder equals the conditional table") {
    auto model = default_collapse_model();
    model.p_u = 1.0;
    const std::vector<int> ones(model.n_units, 1);
    for (SubunitCount m : {SubunitCount{}, SubunitCount{4}}) {
      const auto a = exact_history_distribution(model, m);
      const auto b = conditional_history_distribution(model, m, ones);
      for (std::size_t k = 0; k < a.probs.size(); ++k)
        CHECK(std::abs(a.probs[k] - b.probs[k]) < 1e-15);
    }
  }

  TEST_CASE("distributions sum to one") {
    const auto model = default_collapse_model();
    for (SubunitCount m : {SubunitCount{}, SubunitCount{1}, SubunitCount{5}, SubunitCount{16}}) {
      const auto d = exact_history_distribution(model, m);
      CHECK(d.probs.size() == (1u << (model.n_units * model.t_steps)));
      CHECK(std::abs(d.total() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("KL decreases geometrically in m") {
    const std::vector<std::size_t> grid{2, 4, 8, 16};
    const auto report = kl_curve(default_collapse_model(), grid);
    REQUIRE(report.kl_values.size() == 4);
    for (std::size_t k = 1; k < 4; ++k) {
      CHECK(report.kl_values[k] < report.kl_values[k - 1]);
      CHECK(report.kl_values[k] / report.kl_values[k - 1] <= 0.5);
    }
    CHECK(report.kl_values[0] > 0);
    const auto csv = collapse_csv(report);
    CHECK(csv.rfind("m,kl_nats\n2,", 0) == 0);
    const std::vector<std::size_t> bad{4, 2, 8};
    CHECK_THROWS_AS(kl_curve(default_collapse_model(), bad), InvalidConfig);
  }

  TEST_CASE("super-unit chain reproduces the direct enumeration") {
    for (bool contemporaneous : {true, false}) {
      auto model = default_collapse_model();
      model.contemporaneous = contemporaneous;
      for (SubunitCount m : {SubunitCount{}, SubunitCount{2}, SubunitCount{7}}) {
        const auto direct = exact_history_distribution(model, m);
        const auto chain = build_super_unit(model, m);
        CHECK(chain.n_states == 4);
        const auto via_chain = enumerate_chain(chain, model.t_steps);
        REQUIRE(via_chain.size() == direct.probs.size());
        for (std::size_t k = 0; k < via_chain.size(); ++k)
          CHECK(std::abs(via_chain[k] - direct.probs[k]) < 1e-12);
      }
    }
  }

  TEST_CASE("state space and parameter limits") {
    CHECK_THROWS_AS(validate(constant_q_model(3, 2, Readout::Square, 0.5)), StateSpaceTooLarge);
    CHECK_THROWS_AS(validate(constant_q_model(2, 5, Readout::Square, 0.5)), StateSpaceTooLarge);
    CHECK_NOTHROW(validate(constant_q_model(2, 4, Readout::Square, 0.5)));
    CHECK_THROWS_AS(validate(constant_q_model(1, 1, Readout::Square, 1.0)), InvalidConfig);
    CHECK_THROWS_AS(exact_history_distribution(constant_q_model(3, 1, Readout::Square, 0.5), 2),
                    StateSpaceTooLarge);
  }

  TEST_CASE("model JSON round trip") {
    const auto model = default_collapse_model();
    const auto back = collapse_model_from_json(Json::parse(collapse_model_to_json(model).dump()));
    CHECK(back.n_units == model.n_units);
    CHECK(back.t_steps == model.t_steps);
    CHECK(back.readout == model.readout);
    CHECK(back.p_u == model.p_u);
    CHECK(back.q_table == model.q_table);
    CHECK(back.contemporaneous == model.contemporaneous);
    CHECK_THROWS_AS(collapse_model_from_json(Json::parse(R"({"readout": "cubic"})")), InvalidConfig);
    CHECK_THROWS_AS(collapse_model_from_json(Json::parse(R"({"n_steps": 3})")), InvalidConfig);
  }
}
