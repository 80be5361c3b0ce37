#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/matrix.hpp"

namespace treelet {

/// Variance at or below this threshold is treated as zero: the variable gets
/// correlation 0 with everything so it never wins a merge.
inline constexpr double kVarEps = 1e-12;

/// Plane-rotation angle in radians, restricted to |theta| <= pi/4 so the
/// rotated "sum" coordinate stays aligned with the dominant local component.
struct RotationAngle {
  double theta = 0.0;
};

/// Unbiased sample covariance (divisor n-1) of mean-centered columns.
inline SymMatrix covariance(const DataMatrix& x) {
  const std::size_t n = x.rows(), p = x.cols();
  if (n < 2) throw shape_error("covariance: need at least 2 rows");
  if (p < 2) throw shape_error("covariance: need at least 2 columns");
  x.require_finite("covariance input");

  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) mean[j] += x(i, j);
  for (std::size_t j = 0; j < p; ++j) mean[j] /= static_cast<double>(n);

  SymMatrix c(p);
  std::vector<double> dev(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) dev[j] = x(i, j) - mean[j];
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) c.raw(a, b) += dev[a] * dev[b];
  }
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) c.set(a, b, c.raw(a, b) * scale);
  return c;
}

/// Correlation from a covariance matrix. Diagonal is exactly 1; variables
/// with variance <= kVarEps get 0 off-diagonal by convention.
inline SymMatrix correlation_from_cov(const SymMatrix& c) {
  c.require_symmetric("correlation_from_cov input");
  const std::size_t p = c.dim();
  SymMatrix rho(p);
  for (std::size_t i = 0; i < p; ++i) rho.set(i, i, 1.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double vi = c(i, i), vj = c(j, j);
      if (vi <= kVarEps || vj <= kVarEps) {
        rho.set(i, j, 0.0);
      } else {
        rho.set(i, j, c(i, j) / std::sqrt(vi * vj));
      }
    }
  }
  return rho;
}

/// Rotation angle that zeroes the off-diagonal of the 2x2 block
/// [[c_aa, c_ab], [c_ab, c_bb]], i.e. the local PCA of one variable pair.
/// Solves tan(2*theta) = 2*c_ab / (c_aa - c_bb) and folds the result into
/// [-pi/4, pi/4] by the equivalent role-swapped rotation.
inline RotationAngle jacobi_angle(double c_aa, double c_bb, double c_ab) {
  if (!std::isfinite(c_aa) || !std::isfinite(c_bb) || !std::isfinite(c_ab))
    throw numeric_error("jacobi_angle: non-finite input");
  if (c_ab == 0.0) return RotationAngle{0.0};
  // atan2 keeps the computation stable when c_aa is close to c_bb; the
  // equal-diagonal case lands exactly on sign(c_ab) * pi/4.
  double theta = 0.5 * std::atan2(2.0 * c_ab, c_aa - c_bb);
  constexpr double quarter_pi = 0.78539816339744830962;
  if (theta > quarter_pi) {
    theta -= 2.0 * quarter_pi;
  } else if (theta < -quarter_pi) {
    theta += 2.0 * quarter_pi;
  }
  return RotationAngle{theta};
}

namespace detail {

/// In-place two-sided Givens update of rows/columns a and b.
inline void rotate_sym_inplace(SymMatrix& m, std::size_t a, std::size_t b,
                               double theta) {
  const std::size_t p = m.dim();
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t k = 0; k < p; ++k) {
    const double ma = m(a, k), mb = m(b, k);
    m.raw(a, k) = c * ma + s * mb;
    m.raw(b, k) = -s * ma + c * mb;
  }
  for (std::size_t k = 0; k < p; ++k) {
    const double ma = m(k, a), mb = m(k, b);
    m.raw(k, a) = c * ma + s * mb;
    m.raw(k, b) = -s * ma + c * mb;
  }
  // Restore exact symmetry of the touched cross entries.
  for (std::size_t k = 0; k < p; ++k) {
    m.raw(k, a) = m(a, k);
    m.raw(k, b) = m(b, k);
  }
}

}  // namespace detail

/// Covariance after rotating coordinates a and b by theta. When theta is the
/// jacobi_angle of that pair the (a,b) entry is written as exactly 0 rather
/// than left to round-off.
inline SymMatrix apply_rotation_cov(const SymMatrix& c, std::size_t a,
                                    std::size_t b, RotationAngle theta) {
  const std::size_t p = c.dim();
  if (a >= p || b >= p) throw range_error("apply_rotation_cov: index out of range");
  if (a == b) throw range_error("apply_rotation_cov: indices must differ");

  const double caa = c(a, a), cbb = c(b, b), cab = c(a, b);
  SymMatrix out = c;
  detail::rotate_sym_inplace(out, a, b, theta.theta);
  if (std::isfinite(caa) && std::isfinite(cbb) && std::isfinite(cab) &&
      theta.theta == jacobi_angle(caa, cbb, cab).theta) {
    out.set(a, b, 0.0);
  }
  return out;
}

/// Per-row rotation of columns a and b; row norms are preserved.
inline DataMatrix apply_rotation_data(const DataMatrix& x, std::size_t a,
                                      std::size_t b, RotationAngle theta) {
  const std::size_t p = x.cols();
  if (a >= p || b >= p) throw range_error("apply_rotation_data: index out of range");
  if (a == b) throw range_error("apply_rotation_data: indices must differ");

  const double c = std::cos(theta.theta), s = std::sin(theta.theta);
  DataMatrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    const double xa = r[a], xb = r[b];
    r[a] = c * xa + s * xb;
    r[b] = -s * xa + c * xb;
  }
  return out;
}

}  // namespace treelet
