#include "sthcm/linalg.hpp"

#include <cmath>

#include "sthcm/errors.hpp"

namespace sthcm {

void DesignMatrix::check() const {
  if (values.size() != rows * columns.size()) throw Error("design values do not match shape");
  if (target.size() != rows) throw Error("design target length differs from row count");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("design matrix has a non-finite entry");
  for (double v : target)
    if (!std::isfinite(v)) throw Error("design target has a non-finite entry");
}

std::vector<double> solve_least_squares(const DesignMatrix& design) {
  design.check();
  const std::size_t n = design.rows;
  const std::size_t p = design.cols();
  if (n < p) throw TooFewRows(n, p);

  // Column-major working copy; Householder vectors overwrite the lower part.
  std::vector<double> a(n * p);
  std::vector<double> col_norm(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) a[c * n + r] = design.at(r, c);
  for (std::size_t c = 0; c < p; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < n; ++r) s += a[c * n + r] * a[c * n + r];
    col_norm[c] = std::sqrt(s);
  }
  std::vector<double> qty = design.target;
  std::vector<double> diag(p);

  constexpr double kRankTol = 1e-10;
  for (std::size_t k = 0; k < p; ++k) {
    double* col = a.data() + k * n;
    double norm = 0;
    for (std::size_t r = k; r < n; ++r) norm += col[r] * col[r];
    norm = std::sqrt(norm);
    if (col_norm[k] == 0.0 || norm <= kRankTol * col_norm[k])
      throw RankDeficient(k, design.columns[k]);

    const double alpha = col[k] > 0 ? -norm : norm;
    // v = x - alpha e1, stored in col[k..n); beta = 2 / v'v.
    col[k] -= alpha;
    double vtv = 0;
    for (std::size_t r = k; r < n; ++r) vtv += col[r] * col[r];
    const double beta = 2.0 / vtv;

    for (std::size_t c = k + 1; c < p; ++c) {
      double* other = a.data() + c * n;
      double dot = 0;
      for (std::size_t r = k; r < n; ++r) dot += col[r] * other[r];
      dot *= beta;
      for (std::size_t r = k; r < n; ++r) other[r] -= dot * col[r];
    }
    double dot = 0;
    for (std::size_t r = k; r < n; ++r) dot += col[r] * qty[r];
    dot *= beta;
    for (std::size_t r = k; r < n; ++r) qty[r] -= dot * col[r];
    diag[k] = alpha;
  }

  // Back substitution on R (diagonal in diag, strict upper part in a).
  std::vector<double> coef(p);
  for (std::size_t k = p; k-- > 0;) {
    double s = qty[k];
    for (std::size_t c = k + 1; c < p; ++c) s -= a[c * n + k] * coef[c];
    coef[k] = s / diag[k];
  }
  return coef;
}

std::vector<double> residuals(const DesignMatrix& design, std::span<const double> coef) {
  std::vector<double> out(design.rows);
  for (std::size_t r = 0; r < design.rows; ++r) {
    double fit = 0;
    const auto x = design.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) fit += x[c] * coef[c];
    out[r] = design.target[r] - fit;
  }
  return out;
}

}  // namespace sthcm
