#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sthcm {

/// Dense regression problem: row-major values plus a target vector.
struct DesignMatrix {
  std::size_t rows = 0;
  std::vector<std::string> columns;
  std::vector<double> values;
  std::vector<double> target;

  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * columns.size(), columns.size()};
  }

  /// Throws Error when shapes disagree or an entry is not finite.
  void check() const;
};

/// Minimizer of ||X b - y||^2 via Householder QR. Throws RankDeficient naming
/// the first column that is (numerically) a combination of earlier ones.
std::vector<double> solve_least_squares(const DesignMatrix& design);

/// y - X b.
std::vector<double> residuals(const DesignMatrix& design, std::span<const double> coef);

}  // namespace sthcm
