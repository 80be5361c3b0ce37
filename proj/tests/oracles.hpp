#pragma once

// Test-only reference implementations, deliberately independent of the
// library code paths they are used to check.

#include <cmath>
#include <cstddef>
#include <vector>

#include "treelet/matrix.hpp"

namespace oracle {

struct Eigen2x2 {
  double lambda1, lambda2;  // lambda1 >= lambda2
  double v1[2], v2[2];      // unit eigenvectors for lambda1, lambda2
};

/// Closed-form eigendecomposition of [[a, b], [b, c]] via the quadratic
/// formula, no rotations involved.
inline Eigen2x2 eigen_2x2(double a, double c, double b) {
  Eigen2x2 e{};
  const double tr = a + c;
  const double gap = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
  e.lambda1 = 0.5 * (tr + gap);
  e.lambda2 = 0.5 * (tr - gap);

  auto unit_for = [&](double lambda, double out[2]) {
    // (A - lambda I) v = 0; pick the better-conditioned row.
    double vx = b, vy = lambda - a;
    if (std::fabs(b) + std::fabs(lambda - a) < std::fabs(lambda - c) + std::fabs(b)) {
      vx = lambda - c;
      vy = b;
    }
    double norm = std::sqrt(vx * vx + vy * vy);
    if (norm == 0.0) {  // multiple of identity
      vx = 1.0;
      vy = 0.0;
      norm = 1.0;
    }
    out[0] = vx / norm;
    out[1] = vy / norm;
  };
  unit_for(e.lambda1, e.v1);
  unit_for(e.lambda2, e.v2);
  // Force orthogonality in the degenerate case.
  if (std::fabs(e.v1[0] * e.v2[0] + e.v1[1] * e.v2[1]) > 0.5) {
    e.v2[0] = -e.v1[1];
    e.v2[1] = e.v1[0];
  }
  return e;
}

/// Plain triple-loop dense product.
inline treelet::DataMatrix matmul(const treelet::DataMatrix& a,
                                  const treelet::DataMatrix& b) {
  treelet::DataMatrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

/// Sum over rows of squared projections onto one basis column.
inline double projection_energy(const treelet::DataMatrix& x,
                                const treelet::DataMatrix& basis_columns,
                                std::size_t column) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j)
      dot += x(i, j) * basis_columns(j, column);
    total += dot * dot;
  }
  return total;
}

/// Exhaustive max-|similarity| scan over active pairs; ties resolve to the
/// smallest (i, j).
inline std::pair<std::size_t, std::size_t> best_pair_scan(
    const treelet::SymMatrix& state, const std::vector<char>& active,
    bool correlation) {
  std::size_t best_i = 0, best_j = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    if (!active[i]) continue;
    for (std::size_t j = i + 1; j < state.dim(); ++j) {
      if (!active[j]) continue;
      double sim;
      if (correlation) {
        const double vi = state(i, i), vj = state(j, j);
        sim = (vi <= 1e-12 || vj <= 1e-12)
                  ? 0.0
                  : std::fabs(state(i, j) / std::sqrt(vi * vj));
      } else {
        sim = std::fabs(state(i, j));
      }
      if (sim > best) {
        best = sim;
        best_i = i;
        best_j = j;
      }
    }
  }
  return {best_i, best_j};
}

/// max |(B^T B - I)_{ij}|.
inline double gram_deviation(const treelet::DataMatrix& columns) {
  double worst = 0.0;
  for (std::size_t a = 0; a < columns.cols(); ++a)
    for (std::size_t b = 0; b < columns.cols(); ++b) {
      double dot = 0.0;
      for (std::size_t r = 0; r < columns.rows(); ++r)
        dot += columns(r, a) * columns(r, b);
      worst = std::max(worst, std::fabs(dot - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

inline double max_abs_diff(const treelet::DataMatrix& a, const treelet::DataMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
  return worst;
}

inline double max_abs_diff(const treelet::SymMatrix& a, const treelet::SymMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace oracle
