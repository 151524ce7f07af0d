#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "sthcm/errors.hpp"
#include "sthcm/linalg.hpp"

using namespace sthcm;

namespace {

DesignMatrix make(std::size_t rows, std::vector<std::string> cols, std::vector<double> values,
                  std::vector<double> target) {
  return DesignMatrix{rows, std::move(cols), std::move(values), std::move(target)};
}

// Two-column least squares through the 2x2 normal equations, solved by Cramer's rule.
std::array<double, 2> normal_equations_2(const DesignMatrix& d) {
  double a = 0, b = 0, c = 0, u = 0, v = 0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double x0 = d.at(r, 0), x1 = d.at(r, 1), y = d.target[r];
    a += x0 * x0;
    b += x0 * x1;
    c += x1 * x1;
    u += x0 * y;
    v += x1 * y;
  }
  const double det = a * c - b * b;
  return {(c * u - b * v) / det, (a * v - b * u) / det};
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("identity design returns the target") {
    const auto d = make(3, {"a", "b", "c"}, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {2.5, -1, 7});
    const auto b = solve_least_squares(d);
    CHECK(b[0] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(-1).epsilon(1e-14));
    CHECK(b[2] == doctest::Approx(7).epsilon(1e-14));
  }

  TEST_CASE("exact linear relation is recovered") {
    std::vector<double> x, y;
    for (int r = 0; r < 10; ++r) {
      x.push_back(1.0);
      x.push_back(r);
      y.push_back(3.0 - 0.25 * r);
    }
    const auto b = solve_least_squares(make(10, {"c", "x"}, x, y));
    CHECK(std::abs(b[0] - 3.0) < 1e-12);
    CHECK(std::abs(b[1] + 0.25) < 1e-12);
  }

  TEST_CASE("4x2 random systems match the normal-equation oracle") {
    std::mt19937_64 gen(2718);
    std::normal_distribution<double> z;
    int checked = 0;
    while (checked < 100) {
      std::vector<double> x(8), y(4);
      for (auto& v : x) v = z(gen);
      for (auto& v : y) v = z(gen);
      const auto d = make(4, {"x0", "x1"}, x, y);
      const auto oracle = normal_equations_2(d);
      if (!std::isfinite(oracle[0])) continue;
      const auto b = solve_least_squares(d);
      CHECK(std::abs(b[0] - oracle[0]) < 1e-10);
      CHECK(std::abs(b[1] - oracle[1]) < 1e-10);
      ++checked;
    }
  }

  TEST_CASE("residuals are orthogonal to every column") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> z;
    const std::size_t n = 50, p = 5;
    std::vector<double> x(n * p), y(n);
    for (auto& v : x) v = z(gen);
    for (auto& v : y) v = z(gen);
    const auto d = make(n, {"a", "b", "c", "d", "e"}, x, y);
    const auto b = solve_least_squares(d);
    const auto res = residuals(d, b);
    for (std::size_t c = 0; c < p; ++c) {
      double dot = 0;
      for (std::size_t r = 0; r < n; ++r) dot += d.at(r, c) * res[r];
      CHECK(std::abs(dot) < 1e-10);
    }
  }

  TEST_CASE("rank deficiency names the dependent column") {
    // third column = first + second
    const auto d = make(4, {"a", "b", "a_plus_b"}, {1, 0, 1, 0, 1, 1, 1, 1, 2, 2, 3, 5}, {1, 2, 3, 4});
    try {
      solve_least_squares(d);
      FAIL("expected RankDeficient");
    } catch (const RankDeficient& e) {
      CHECK(e.column == 2);
      CHECK(e.name == "a_plus_b");
    }
    const auto zero = make(3, {"x", "zero"}, {1, 0, 2, 0, 3, 0}, {1, 2, 3});
    CHECK_THROWS_AS(solve_least_squares(zero), RankDeficient);
  }

  TEST_CASE("too few rows and shape errors") {
    CHECK_THROWS_AS(solve_least_squares(make(1, {"a", "b"}, {1, 2}, {1})), TooFewRows);
    CHECK_THROWS_AS(solve_least_squares(make(2, {"a"}, {1}, {1, 2})), Error);
    CHECK_THROWS_AS(solve_least_squares(make(2, {"a"}, {1, NAN}, {1, 2})), Error);
  }
}
