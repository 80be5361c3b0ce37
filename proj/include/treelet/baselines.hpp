#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/matrix.hpp"
#include "treelet/stats.hpp"
#include "treelet/treelet.hpp"

namespace treelet {

struct SymEigen {
  std::vector<double> values;  // descending
  DataMatrix vectors;          // orthonormal columns, matching order
};

/// Symmetric eigendecomposition by cyclic Jacobi sweeps, iterated until the
/// off-diagonal Frobenius norm is at or below `tol`. Eigenvalues come back
/// sorted descending with sign-normalized vectors.
inline SymEigen sym_eigen(const SymMatrix& m, double tol = 1e-11) {
  m.require_symmetric("sym_eigen input");
  const std::size_t p = m.dim();
  SymMatrix a = m;
  DataMatrix v(p, p, 0.0);
  for (std::size_t i = 0; i < p; ++i) v(i, i) = 1.0;

  auto off_frobenius = [&]() {
    double sum = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) sum += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(sum);
  };

  const int max_sweeps = 100;
  int sweep = 0;
  while (off_frobenius() > tol) {
    if (++sweep > max_sweeps)
      throw numeric_error("sym_eigen: Jacobi sweeps did not converge");
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (a(i, j) == 0.0) continue;
        const double theta = jacobi_angle(a(i, i), a(j, j), a(i, j)).theta;
        detail::rotate_sym_inplace(a, i, j, theta);
        a.set(i, j, 0.0);
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t r = 0; r < p; ++r) {
          const double vi = v(r, i), vj = v(r, j);
          v(r, i) = c * vi + s * vj;
          v(r, j) = -s * vi + c * vj;
        }
      }
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEigen out;
  out.values.resize(p);
  out.vectors = DataMatrix(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < p; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  const std::vector<double> flip = detail::sign_flips(out.vectors);
  for (std::size_t k = 0; k < p; ++k)
    if (flip[k] < 0.0)
      for (std::size_t r = 0; r < p; ++r) out.vectors(r, k) = -out.vectors(r, k);
  return out;
}

struct PcaResult {
  std::vector<double> eigenvalues;  // descending
  DataMatrix eigenvectors;          // orthonormal columns
  std::vector<double> mean;
};

/// Principal components of the sample covariance of x.
inline PcaResult pca(const DataMatrix& x) {
  const SymMatrix c = covariance(x);
  SymEigen eig = sym_eigen(c);
  PcaResult out;
  out.eigenvalues = std::move(eig.values);
  out.eigenvectors = std::move(eig.vectors);
  out.mean.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out.mean[j] += x(i, j);
  for (double& m : out.mean) m /= static_cast<double>(x.rows());
  return out;
}

/// Dissimilarity between variables: 1 - |rho| by default, or 1 - rho when
/// `signed_distance` is set. Degenerate variables are maximally distant.
inline SymMatrix correlation_distance(const DataMatrix& x,
                                      bool signed_distance = false) {
  const SymMatrix rho = correlation_from_cov(covariance(x));
  const std::size_t p = rho.dim();
  SymMatrix d(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double r = rho(i, j);
      d.set(i, j, signed_distance ? 1.0 - r : 1.0 - std::fabs(r));
    }
  return d;
}

struct DendrogramMerge {
  std::size_t id_a = 0;  // id_a < id_b; leaves are 0..p-1, internal p+step
  std::size_t id_b = 0;
  double height = 0.0;
  std::size_t new_id = 0;
};

struct Dendrogram {
  std::size_t leaf_count = 0;
  std::vector<DendrogramMerge> merges;  // exactly p-1 entries
};

struct ClusterResult {
  Dendrogram dendrogram;
  std::vector<std::size_t> labels;  // cut at the requested cluster count
};

/// Average-linkage agglomeration of a distance matrix (Lance-Williams
/// update), cut into `target_clusters` groups. Ties go to the
/// lexicographically smallest cluster-id pair.
inline ClusterResult hier_cluster(const SymMatrix& d, std::size_t target_clusters) {
  d.require_symmetric("hier_cluster input");
  const std::size_t p = d.dim();
  if (p < 1) throw shape_error("hier_cluster: empty distance matrix");
  if (target_clusters < 1 || target_clusters > p)
    throw range_error("hier_cluster: target cluster count out of range");
  for (std::size_t i = 0; i < p; ++i) {
    if (d(i, i) != 0.0) throw data_error("hier_cluster: nonzero diagonal");
    for (std::size_t j = i + 1; j < p; ++j)
      if (!(d(i, j) >= 0.0)) throw data_error("hier_cluster: negative or NaN distance");
  }

  // Working copy indexed by slots; each slot holds one live cluster.
  SymMatrix work = d;
  std::vector<std::size_t> cluster_id(p), size(p, 1);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<char> alive(p, 1);
  std::vector<std::vector<std::size_t>> members(p);
  for (std::size_t i = 0; i < p; ++i) members[i] = {i};

  ClusterResult out;
  out.dendrogram.leaf_count = p;
  std::vector<std::size_t> cut_labels(p, 0);
  bool cut_taken = target_clusters == p;
  if (cut_taken)
    for (std::size_t i = 0; i < p; ++i) cut_labels[i] = i;

  for (std::size_t step = 0; step + 1 < p; ++step) {
    std::size_t best_i = 0, best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < p; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < p; ++j) {
        if (!alive[j]) continue;
        const double dist = work(i, j);
        const std::size_t lo = std::min(cluster_id[i], cluster_id[j]);
        const std::size_t hi = std::max(cluster_id[i], cluster_id[j]);
        const std::size_t blo = std::min(cluster_id[best_i], cluster_id[best_j]);
        const std::size_t bhi = std::max(cluster_id[best_i], cluster_id[best_j]);
        if (!found || dist < best ||
            (dist == best && (lo < blo || (lo == blo && hi < bhi)))) {
          best = dist;
          best_i = i;
          best_j = j;
          found = true;
        }
      }
    }

    const std::size_t new_id = p + step;
    out.dendrogram.merges.push_back(
        DendrogramMerge{std::min(cluster_id[best_i], cluster_id[best_j]),
                        std::max(cluster_id[best_i], cluster_id[best_j]), best,
                        new_id});

    // Lance-Williams average-linkage update into slot best_i.
    const double ni = static_cast<double>(size[best_i]);
    const double nj = static_cast<double>(size[best_j]);
    for (std::size_t k = 0; k < p; ++k) {
      if (!alive[k] || k == best_i || k == best_j) continue;
      work.set(best_i, k, (ni * work(best_i, k) + nj * work(best_j, k)) / (ni + nj));
    }
    alive[best_j] = 0;
    size[best_i] += size[best_j];
    cluster_id[best_i] = new_id;
    members[best_i].insert(members[best_i].end(), members[best_j].begin(),
                           members[best_j].end());

    const std::size_t live = p - (step + 1);
    if (!cut_taken && live == target_clusters) {
      // Number clusters 0..target-1 by their smallest leaf.
      std::vector<std::size_t> slots;
      for (std::size_t i = 0; i < p; ++i)
        if (alive[i]) slots.push_back(i);
      std::sort(slots.begin(), slots.end(), [&](std::size_t a, std::size_t b) {
        return *std::min_element(members[a].begin(), members[a].end()) <
               *std::min_element(members[b].begin(), members[b].end());
      });
      for (std::size_t lbl = 0; lbl < slots.size(); ++lbl)
        for (std::size_t leaf : members[slots[lbl]]) cut_labels[leaf] = lbl;
      cut_taken = true;
    }
  }
  if (!cut_taken)  // target == 1
    std::fill(cut_labels.begin(), cut_labels.end(), 0);
  out.labels = std::move(cut_labels);
  return out;
}

namespace detail {

inline std::vector<double> silhouette_values(const SymMatrix& d,
                                             const std::vector<std::size_t>& labels) {
  const std::size_t n = d.dim();
  if (labels.size() != n) throw shape_error("silhouette: label count mismatch");
  std::set<std::size_t> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2)
    throw config_error("silhouette: undefined for a single cluster");

  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double own_sum = 0.0;
    std::size_t own_count = 0;
    std::vector<double> other_sum;
    std::vector<std::size_t> other_count;
    std::vector<std::size_t> other_label;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        own_sum += d(i, j);
        ++own_count;
      } else {
        auto it = std::find(other_label.begin(), other_label.end(), labels[j]);
        if (it == other_label.end()) {
          other_label.push_back(labels[j]);
          other_sum.push_back(d(i, j));
          other_count.push_back(1);
        } else {
          const std::size_t idx = static_cast<std::size_t>(it - other_label.begin());
          other_sum[idx] += d(i, j);
          ++other_count[idx];
        }
      }
    }
    if (own_count == 0) {
      s[i] = 0.0;  // singleton convention
      continue;
    }
    const double a = own_sum / static_cast<double>(own_count);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < other_label.size(); ++k)
      b = std::min(b, other_sum[k] / static_cast<double>(other_count[k]));
    const double denom = std::max(a, b);
    s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

}  // namespace detail

inline double silhouette_mean(const SymMatrix& d,
                              const std::vector<std::size_t>& labels) {
  const std::vector<double> s = detail::silhouette_values(d, labels);
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

inline double silhouette_median(const SymMatrix& d,
                                const std::vector<std::size_t>& labels) {
  std::vector<double> s = detail::silhouette_values(d, labels);
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

/// Indices of the m variables most associated with y by simple linear
/// regression, ranked by |t-statistic| of the slope (ties: lower index).
/// Zero-variance predictors rank last with t = 0.
inline std::vector<std::size_t> univariate_screen(const DataMatrix& x,
                                                  const std::vector<double>& y,
                                                  std::size_t m) {
  const std::size_t n = x.rows(), p = x.cols();
  if (n <= 2) throw shape_error("univariate_screen: need more than 2 samples");
  if (y.size() != n) throw shape_error("univariate_screen: outcome length mismatch");
  if (m < 1 || m > p) throw range_error("univariate_screen: m out of range");
  x.require_finite("univariate_screen input");

  double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> t(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double x_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) x_mean += x(i, j);
    x_mean /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = x(i, j) - x_mean;
      sxx += dx * dx;
      sxy += dx * (y[i] - y_mean);
    }
    if (sxx / static_cast<double>(n - 1) <= kVarEps) {
      t[j] = 0.0;
      continue;
    }
    const double slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = (y[i] - y_mean) - slope * (x(i, j) - x_mean);
      sse += resid * resid;
    }
    if (sse <= 0.0) {
      t[j] = std::numeric_limits<double>::infinity();
    } else {
      const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
      t[j] = std::fabs(slope) / se;
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });
  order.resize(m);
  return order;
}

/// Largest principal angle between the column spans of two bases with the
/// same ambient dimension, via singular values of the cross-Gram matrix.
inline double subspace_angle(const DataMatrix& basis_a, const DataMatrix& basis_b) {
  if (basis_a.rows() != basis_b.rows())
    throw shape_error("subspace_angle: ambient dimension mismatch");
  const std::size_t p = basis_a.rows();
  const std::size_t ka = basis_a.cols(), kb = basis_b.cols();
  if (ka == 0 || kb == 0) throw shape_error("subspace_angle: empty basis");

  // Re-orthonormalize defensively (modified Gram-Schmidt).
  auto orthonormalize = [p](const DataMatrix& b) {
    DataMatrix q = b;
    std::size_t kept = 0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      std::vector<double> col(p);
      for (std::size_t r = 0; r < p; ++r) col[r] = q(r, j);
      for (std::size_t prev = 0; prev < kept; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < p; ++r) dot += col[r] * q(r, prev);
        for (std::size_t r = 0; r < p; ++r) col[r] -= dot * q(r, prev);
      }
      double norm = 0.0;
      for (double v : col) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-12) continue;
      for (std::size_t r = 0; r < p; ++r) q(r, kept) = col[r] / norm;
      ++kept;
    }
    DataMatrix out(p, kept);
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t j = 0; j < kept; ++j) out(r, j) = q(r, j);
    return out;
  };

  const DataMatrix qa = orthonormalize(basis_a);
  const DataMatrix qb = orthonormalize(basis_b);
  const std::size_t m = std::min(qa.cols(), qb.cols());
  if (m == 0) throw shape_error("subspace_angle: rank-deficient basis");

  // Singular values of G = Qa^T Qb from the eigenvalues of G^T G.
  DataMatrix g(qa.cols(), qb.cols());
  for (std::size_t i = 0; i < qa.cols(); ++i)
    for (std::size_t j = 0; j < qb.cols(); ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < p; ++r) dot += qa(r, i) * qb(r, j);
      g(i, j) = dot;
    }
  SymMatrix gtg(qb.cols());
  for (std::size_t i = 0; i < qb.cols(); ++i)
    for (std::size_t j = i; j < qb.cols(); ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < qa.cols(); ++r) dot += g(r, i) * g(r, j);
      gtg.set(i, j, dot);
    }
  SymEigen eig = sym_eigen(gtg, 1e-13);
  const double sigma_sq = std::max(eig.values[m - 1], 0.0);
  const double sigma = std::clamp(std::sqrt(sigma_sq), 0.0, 1.0);
  return std::acos(sigma);
}

/// Convenience overload for treelet bases.
inline double subspace_angle(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  return subspace_angle(a.vectors, b.vectors);
}

}  // namespace treelet
