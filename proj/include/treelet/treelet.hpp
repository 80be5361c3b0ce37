#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/matrix.hpp"
#include "treelet/stats.hpp"

namespace treelet {

/// Pair-similarity measure driving merge selection: the absolute correlation
/// of the current coordinates (default) or the absolute covariance entry.
/// Rotations always come from the running covariance state.
enum class SimilarityKind { abs_correlation, abs_covariance };

inline const char* to_string(SimilarityKind k) {
  return k == SimilarityKind::abs_correlation ? "abs_correlation"
                                              : "abs_covariance";
}

/// One merge event. Indices are original coordinate labels; sum_idx is the
/// coordinate that stays active, diff_idx is frozen from this level on.
struct Rotation {
  std::size_t level = 0;  // 1-based merge index
  std::size_t idx_a = 0;  // idx_a < idx_b
  std::size_t idx_b = 0;
  RotationAngle theta;
  std::size_t sum_idx = 0;
  std::size_t diff_idx = 0;
};

/// Fitted treelet tree: an ordered list of plane rotations, at most p-1 of
/// them. Immutable once built; level l means "the first l rotations".
class TreeletModel {
public:
  TreeletModel() = default;

  TreeletModel(std::size_t p, SimilarityKind kind, bool centered_cov,
               std::vector<Rotation> rotations,
               std::vector<std::vector<std::uint32_t>> active_history)
      : p_(p),
        kind_(kind),
        centered_cov_(centered_cov),
        rotations_(std::move(rotations)),
        active_history_(std::move(active_history)) {}

  std::size_t p() const { return p_; }
  SimilarityKind similarity_kind() const { return kind_; }
  bool centered_cov() const { return centered_cov_; }
  const std::vector<Rotation>& rotations() const { return rotations_; }
  std::size_t max_level() const { return rotations_.size(); }

  /// Active (sum) coordinate indices after each level, levels 0..L.
  const std::vector<std::vector<std::uint32_t>>& active_history() const {
    return active_history_;
  }

  bool operator==(const TreeletModel& o) const {
    if (p_ != o.p_ || kind_ != o.kind_ || centered_cov_ != o.centered_cov_ ||
        rotations_.size() != o.rotations_.size())
      return false;
    for (std::size_t i = 0; i < rotations_.size(); ++i) {
      const Rotation &a = rotations_[i], &b = o.rotations_[i];
      if (a.level != b.level || a.idx_a != b.idx_a || a.idx_b != b.idx_b ||
          a.theta.theta != b.theta.theta || a.sum_idx != b.sum_idx)
        return false;
    }
    return true;
  }

private:
  std::size_t p_ = 0;
  SimilarityKind kind_ = SimilarityKind::abs_correlation;
  bool centered_cov_ = true;
  std::vector<Rotation> rotations_;
  std::vector<std::vector<std::uint32_t>> active_history_;
};

enum class BasisVectorKind { sum, difference };

struct BasisVectorLabel {
  std::size_t coord = 0;  // original coordinate this vector belongs to
  BasisVectorKind kind = BasisVectorKind::sum;
  std::size_t level = 0;  // difference: freeze level; sum: last merge level
};

/// K orthonormal column vectors of length p with their treelet labels.
struct OrthonormalBasis {
  std::size_t p = 0;
  std::size_t k = 0;
  DataMatrix vectors;  // p rows, k columns
  std::vector<BasisVectorLabel> labels;
};

struct EnergyScore {
  double total_energy = 0.0;
  std::vector<double> per_vector_energy;
  double normalized = 0.0;
};

namespace detail {

struct PairCand {
  double sim;
  std::uint32_t i, j;
  std::uint32_t ver_i, ver_j;
};

struct PairCandLess {
  bool operator()(const PairCand& a, const PairCand& b) const {
    if (a.sim != b.sim) return a.sim < b.sim;
    if (a.i != b.i) return a.i > b.i;  // equal scores: smallest (i, j) wins
    return a.j > b.j;
  }
};

inline double pair_similarity(const SymMatrix& state, SimilarityKind kind,
                              std::size_t i, std::size_t j) {
  if (kind == SimilarityKind::abs_covariance) return std::fabs(state(i, j));
  const double vi = state(i, i), vj = state(j, j);
  if (vi <= kVarEps || vj <= kVarEps) return 0.0;
  return std::fabs(state(i, j) / std::sqrt(vi * vj));
}

}  // namespace detail

/// Builds the treelet tree from a covariance matrix; the tree depends on the
/// data only through it. Performs `levels` merges, each joining the active
/// pair with the largest |similarity| (ties resolved to the lexicographically
/// smallest index pair) by the plane rotation that decorrelates the pair in
/// the running covariance, then freezing the lower-variance coordinate.
inline TreeletModel fit_from_cov(const SymMatrix& c, std::size_t levels,
                                 SimilarityKind kind = SimilarityKind::abs_correlation) {
  c.require_symmetric("fit_from_cov input");
  const std::size_t p = c.dim();
  if (p < 2) throw shape_error("fit_from_cov: need at least 2 variables");
  if (levels > p - 1) throw range_error("fit_from_cov: level count exceeds p-1");
  for (double v : c.values())
    if (!std::isfinite(v)) throw data_error("fit_from_cov: non-finite covariance");

  SymMatrix state = c;

  std::vector<char> active(p, 1);
  std::vector<std::uint32_t> version(p, 0);
  std::priority_queue<detail::PairCand, std::vector<detail::PairCand>,
                      detail::PairCandLess> heap;

  auto push_pair = [&](std::size_t i, std::size_t j) {
    heap.push(detail::PairCand{detail::pair_similarity(state, kind, i, j),
                               static_cast<std::uint32_t>(i),
                               static_cast<std::uint32_t>(j), version[i],
                               version[j]});
  };

  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) push_pair(i, j);

  auto rescan = [&]() {
    heap = {};
    for (std::size_t i = 0; i < p; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < p; ++j)
        if (active[j]) push_pair(i, j);
    }
  };

  auto pop_best = [&]() -> detail::PairCand {
    for (int attempt = 0; attempt < 2; ++attempt) {
      while (!heap.empty()) {
        detail::PairCand top = heap.top();
        heap.pop();
        // Lazy invalidation: stale version stamps or inactive ends are
        // rejected rather than trusted.
        if (active[top.i] && active[top.j] && version[top.i] == top.ver_i &&
            version[top.j] == top.ver_j)
          return top;
      }
      rescan();
    }
    throw numeric_error("fit_from_cov: no active pair left");
  };

  std::vector<Rotation> rotations;
  rotations.reserve(levels);
  std::vector<std::vector<std::uint32_t>> history;
  history.reserve(levels + 1);
  auto snapshot = [&]() {
    std::vector<std::uint32_t> act;
    for (std::size_t i = 0; i < p; ++i)
      if (active[i]) act.push_back(static_cast<std::uint32_t>(i));
    history.push_back(std::move(act));
  };
  snapshot();

  for (std::size_t level = 1; level <= levels; ++level) {
    const detail::PairCand best = pop_best();
    const std::size_t a = best.i, b = best.j;

    const RotationAngle theta =
        jacobi_angle(state(a, a), state(b, b), state(a, b));
    detail::rotate_sym_inplace(state, a, b, theta.theta);
    state.set(a, b, 0.0);  // decorrelated by construction

    const std::size_t sum_idx = state(a, a) >= state(b, b) ? a : b;
    const std::size_t diff_idx = sum_idx == a ? b : a;
    active[diff_idx] = 0;
    ++version[a];
    ++version[b];
    for (std::size_t k = 0; k < p; ++k) {
      if (!active[k] || k == sum_idx) continue;
      push_pair(std::min(k, sum_idx), std::max(k, sum_idx));
    }

    rotations.push_back(Rotation{level, a, b, theta, sum_idx, diff_idx});
    snapshot();
  }

  return TreeletModel(p, kind, true, std::move(rotations), std::move(history));
}

/// Builds the treelet tree from data; identical to fit_from_cov on the sample
/// covariance of x.
inline TreeletModel fit(const DataMatrix& x, std::size_t levels,
                        SimilarityKind kind = SimilarityKind::abs_correlation) {
  return fit_from_cov(covariance(x), levels, kind);
}

/// fit() run to completion (p-1 merges).
inline TreeletModel fit_complete(const DataMatrix& x,
                                 SimilarityKind kind = SimilarityKind::abs_correlation) {
  return fit(x, x.cols() - 1, kind);
}

namespace detail {

/// Columns of the composition of the first l rotations applied to the
/// identity, before sign normalization.
inline DataMatrix raw_basis_columns(const TreeletModel& model, std::size_t l) {
  const std::size_t p = model.p();
  DataMatrix b(p, p, 0.0);
  for (std::size_t i = 0; i < p; ++i) b(i, i) = 1.0;
  for (std::size_t m = 0; m < l; ++m) {
    const Rotation& r = model.rotations()[m];
    const double c = std::cos(r.theta.theta), s = std::sin(r.theta.theta);
    for (std::size_t row = 0; row < p; ++row) {
      const double va = b(row, r.idx_a), vb = b(row, r.idx_b);
      b(row, r.idx_a) = c * va + s * vb;
      b(row, r.idx_b) = -s * va + c * vb;
    }
  }
  return b;
}

/// Per-column factor of +-1 making each basis vector's largest-magnitude
/// entry positive (ties: earliest index decides). Keeps saved bases and
/// reports reproducible despite the sign ambiguity of any PCA-like vector.
inline std::vector<double> sign_flips(const DataMatrix& columns) {
  const std::size_t p = columns.rows(), k = columns.cols();
  std::vector<double> flip(k, 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t arg = 0;
    double best = std::fabs(columns(0, j));
    for (std::size_t i = 1; i < p; ++i) {
      const double a = std::fabs(columns(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (columns(arg, j) < 0.0) flip[j] = -1.0;
  }
  return flip;
}

inline std::vector<BasisVectorLabel> labels_at(const TreeletModel& model,
                                               std::size_t l) {
  const std::size_t p = model.p();
  std::vector<BasisVectorLabel> labels(p);
  std::vector<std::size_t> frozen(p, 0), last(p, 0);
  std::vector<char> is_diff(p, 0);
  for (std::size_t m = 0; m < l; ++m) {
    const Rotation& r = model.rotations()[m];
    last[r.idx_a] = r.level;
    last[r.idx_b] = r.level;
    is_diff[r.diff_idx] = 1;
    frozen[r.diff_idx] = r.level;
  }
  for (std::size_t i = 0; i < p; ++i) {
    labels[i].coord = i;
    labels[i].kind = is_diff[i] ? BasisVectorKind::difference
                                : BasisVectorKind::sum;
    labels[i].level = is_diff[i] ? frozen[i] : last[i];
  }
  return labels;
}

inline void check_level(const TreeletModel& model, std::size_t l) {
  if (l > model.max_level())
    throw range_error("treelet: level exceeds fitted tree height");
}

}  // namespace detail

/// The complete orthonormal basis (K = p) at tree height l: the composition
/// of the first l rotations applied to the identity, sign-normalized.
inline OrthonormalBasis basis_at(const TreeletModel& model, std::size_t l) {
  detail::check_level(model, l);
  const std::size_t p = model.p();
  DataMatrix cols = detail::raw_basis_columns(model, l);
  const std::vector<double> flip = detail::sign_flips(cols);
  for (std::size_t j = 0; j < p; ++j) {
    if (flip[j] < 0.0)
      for (std::size_t i = 0; i < p; ++i) cols(i, j) = -cols(i, j);
  }
  return OrthonormalBasis{p, p, std::move(cols), detail::labels_at(model, l)};
}

/// Coefficients of each row of x in the level-l basis; equals x * basis_at().
inline DataMatrix forward(const TreeletModel& model, std::size_t l,
                          const DataMatrix& x) {
  detail::check_level(model, l);
  if (x.cols() != model.p())
    throw shape_error("forward: column count does not match model");
  const std::vector<double> flip =
      detail::sign_flips(detail::raw_basis_columns(model, l));

  DataMatrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t m = 0; m < l; ++m) {
      const Rotation& rot = model.rotations()[m];
      const double c = std::cos(rot.theta.theta), s = std::sin(rot.theta.theta);
      const double va = r[rot.idx_a], vb = r[rot.idx_b];
      r[rot.idx_a] = c * va + s * vb;
      r[rot.idx_b] = -s * va + c * vb;
    }
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] *= flip[j];
  }
  return out;
}

/// Inverse of forward(): inverse(model, l, forward(model, l, x)) == x.
inline DataMatrix inverse(const TreeletModel& model, std::size_t l,
                          const DataMatrix& coeffs) {
  detail::check_level(model, l);
  if (coeffs.cols() != model.p())
    throw shape_error("inverse: column count does not match model");
  const std::vector<double> flip =
      detail::sign_flips(detail::raw_basis_columns(model, l));

  DataMatrix out = coeffs;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] *= flip[j];
    for (std::size_t m = l; m-- > 0;) {
      const Rotation& rot = model.rotations()[m];
      const double c = std::cos(rot.theta.theta), s = std::sin(rot.theta.theta);
      const double va = r[rot.idx_a], vb = r[rot.idx_b];
      r[rot.idx_a] = c * va - s * vb;
      r[rot.idx_b] = s * va + c * vb;
    }
  }
  return out;
}

/// Squared-projection energy of x on each basis vector, with the normalized
/// fraction of total energy captured. An all-zero x has normalized energy 0.
inline EnergyScore energy_score(const DataMatrix& x,
                                const OrthonormalBasis& basis) {
  if (x.cols() != basis.p)
    throw shape_error("energy_score: dimension mismatch");
  EnergyScore score;
  score.per_vector_energy.assign(basis.k, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j)
      score.total_energy += r[j] * r[j];
    for (std::size_t v = 0; v < basis.k; ++v) {
      double dot = 0.0;
      for (std::size_t j = 0; j < basis.p; ++j) dot += r[j] * basis.vectors(j, v);
      score.per_vector_energy[v] += dot * dot;
    }
  }
  const double captured = std::accumulate(score.per_vector_energy.begin(),
                                          score.per_vector_energy.end(), 0.0);
  score.normalized = score.total_energy > 0.0 ? captured / score.total_energy : 0.0;
  return score;
}

/// The K vectors of basis_at(model, l) with the largest energy on x
/// (ties: lower original index), in ascending coordinate order.
inline OrthonormalBasis best_k_basis(const TreeletModel& model,
                                     const DataMatrix& x, std::size_t l,
                                     std::size_t k) {
  if (k < 1 || k > model.p())
    throw range_error("best_k_basis: K out of range");
  OrthonormalBasis full = basis_at(model, l);
  const EnergyScore score = energy_score(x, full);

  std::vector<std::size_t> order(full.k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score.per_vector_energy[a] > score.per_vector_energy[b];
  });
  std::vector<std::size_t> chosen(order.begin(), order.begin() + k);
  std::sort(chosen.begin(), chosen.end());

  OrthonormalBasis out;
  out.p = full.p;
  out.k = k;
  out.vectors = DataMatrix(full.p, k);
  out.labels.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < full.p; ++r)
      out.vectors(r, c) = full.vectors(r, chosen[c]);
    out.labels[c] = full.labels[chosen[c]];
  }
  return out;
}

}  // namespace treelet
