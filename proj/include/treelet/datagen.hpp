#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/matrix.hpp"
#include "treelet/parallel.hpp"
#include "treelet/rng.hpp"
#include "treelet/treelet.hpp"

namespace treelet {

/// Block-structured covariance: equicorrelated blocks on the diagonal,
/// a constant (default zero) correlation across blocks, and uncorrelated
/// noise variables filling the remainder up to p.
struct BlockCovSpec {
  std::size_t p = 0;
  std::vector<std::size_t> block_sizes;
  double within_corr = 0.0;
  double across_corr = 0.0;
  double noise_var = 1.0;  // variance of every variable

  void validate() const {
    if (p < 2) throw config_error("block spec: p must be at least 2");
    std::size_t total = 0;
    for (std::size_t s : block_sizes) {
      if (s == 0) throw config_error("block spec: empty block");
      total += s;
    }
    if (total > p) throw config_error("block spec: blocks exceed p variables");
    if (!(within_corr >= 0.0 && within_corr < 1.0))
      throw config_error("block spec: within-block correlation must be in [0, 1)");
    if (!(std::fabs(across_corr) <= within_corr || across_corr == 0.0))
      throw config_error("block spec: across-block correlation exceeds within-block");
    if (!(noise_var > 0.0)) throw config_error("block spec: variance must be positive");
  }

  /// Block index per variable; variables outside all blocks get npos.
  std::vector<std::size_t> block_of() const {
    std::vector<std::size_t> out(p, static_cast<std::size_t>(-1));
    std::size_t offset = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
      for (std::size_t i = 0; i < block_sizes[b]; ++i) out[offset + i] = b;
      offset += block_sizes[b];
    }
    return out;
  }
};

namespace detail {

/// Cholesky factor with escalating diagonal jitter (0, 1e-12, 1e-8) before
/// giving up; returns the lower-triangular factor.
inline DataMatrix cholesky_with_jitter(const SymMatrix& sigma) {
  const std::size_t p = sigma.dim();
  const double jitters[] = {0.0, 1e-12, 1e-8};
  for (double jitter : jitters) {
    DataMatrix l(p, p, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < p && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = sigma(i, j) + (i == j ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
        if (i == j) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          l(i, i) = std::sqrt(sum);
        } else {
          l(i, j) = sum / l(j, j);
        }
      }
    }
    if (ok) return l;
  }
  throw numeric_error("cholesky: matrix not positive definite after jitter");
}

}  // namespace detail

/// Exact block-constant covariance for a BlockCovSpec; positive definiteness
/// is verified through the jitter policy.
inline SymMatrix gen_block_cov(const BlockCovSpec& spec) {
  spec.validate();
  const std::vector<std::size_t> block = spec.block_of();
  SymMatrix sigma(spec.p);
  for (std::size_t i = 0; i < spec.p; ++i) {
    sigma.set(i, i, spec.noise_var);
    for (std::size_t j = i + 1; j < spec.p; ++j) {
      const bool structured = block[i] != static_cast<std::size_t>(-1) &&
                              block[j] != static_cast<std::size_t>(-1);
      double rho = 0.0;
      if (structured) rho = block[i] == block[j] ? spec.within_corr : spec.across_corr;
      sigma.set(i, j, rho * spec.noise_var);
    }
  }
  try {
    detail::cholesky_with_jitter(sigma);
  } catch (const numeric_error&) {
    throw config_error("block spec: resulting covariance is not positive definite");
  }
  return sigma;
}

/// Gaussian sample X = Z * chol(Sigma)^T with Z drawn row-major from the
/// pinned generator, so a fixed (Sigma, n, seed) gives bit-identical output.
inline DataMatrix mvn_sample(const SymMatrix& sigma, std::size_t n, std::uint64_t seed) {
  sigma.require_symmetric("mvn_sample input");
  if (n == 0) throw shape_error("mvn_sample: need at least one sample");
  const std::size_t p = sigma.dim();
  const DataMatrix chol = detail::cholesky_with_jitter(sigma);

  Rng rng(seed);
  DataMatrix z(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) z(i, j) = rng.normal();

  DataMatrix x(n, p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k <= j; ++k) sum += z(i, k) * chol(j, k);
      x(i, j) = sum;
    }
  return x;
}

/// Planted sparse loading structure: disjoint consecutive blocks, each
/// carrying one factor. Amplitude 1 gives unit-norm indicator loadings;
/// larger amplitudes scale the planted signal without changing its span.
struct LoadingPattern {
  std::vector<std::size_t> block_sizes;
  std::vector<double> amplitudes;  // empty: all 1.0

  void validate(std::size_t p) const {
    if (block_sizes.empty()) throw config_error("loading pattern: no blocks");
    std::size_t total = 0;
    for (std::size_t s : block_sizes) {
      if (s == 0) throw config_error("loading pattern: empty block");
      total += s;
    }
    if (total > p) throw config_error("loading pattern: blocks exceed p variables");
    if (!amplitudes.empty() && amplitudes.size() != block_sizes.size())
      throw config_error("loading pattern: amplitude count mismatch");
  }
};

struct LatentFactorData {
  DataMatrix x;          // n rows, p columns
  DataMatrix loadings;   // p rows, K0 columns (the planted W)
};

/// X = S * W^T + noise, with factor scores i.i.d. standard normal and
/// disjoint-support loading columns. Scores are drawn before the noise, both
/// row-major, so output is a pure function of (inputs, seed).
inline LatentFactorData gen_latent_factor(std::size_t n, std::size_t p,
                                          const LoadingPattern& pattern,
                                          double noise_sd, std::uint64_t seed) {
  pattern.validate(p);
  if (n == 0) throw shape_error("gen_latent_factor: need at least one sample");
  if (!(noise_sd >= 0.0)) throw config_error("gen_latent_factor: negative noise sd");
  const std::size_t k0 = pattern.block_sizes.size();

  DataMatrix w(p, k0, 0.0);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < k0; ++k) {
    const double amp = pattern.amplitudes.empty() ? 1.0 : pattern.amplitudes[k];
    const double entry = amp / std::sqrt(static_cast<double>(pattern.block_sizes[k]));
    for (std::size_t i = 0; i < pattern.block_sizes[k]; ++i) w(offset + i, k) = entry;
    offset += pattern.block_sizes[k];
  }

  Rng rng(seed);
  DataMatrix scores(n, k0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < k0; ++k) scores(i, k) = rng.normal();

  DataMatrix x(n, p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < k0; ++k) sum += scores(i, k) * w(j, k);
      x(i, j) = sum;
    }
  if (noise_sd > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) x(i, j) += noise_sd * rng.normal();
  }
  return LatentFactorData{std::move(x), std::move(w)};
}

struct StabilityReport {
  std::size_t replicates = 0;
  /// agreement[l-1]: mean over replicates of the fraction of the first l
  /// original merge pairs (as unordered, level-pooled sets) the replicate
  /// reproduces.
  std::vector<double> agreement;
  /// co_merge(i, j): fraction of replicates in which variables i and j are
  /// merged directly at any level.
  SymMatrix co_merge;
};

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> merge_pairs(
    const TreeletModel& model) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(model.rotations().size());
  for (const Rotation& r : model.rotations()) out.emplace_back(r.idx_a, r.idx_b);
  return out;
}

/// Level-pooled prefix agreement between two merge-pair sequences.
inline double pair_agreement(
    const std::vector<std::pair<std::size_t, std::size_t>>& reference,
    const std::vector<std::pair<std::size_t, std::size_t>>& candidate,
    std::size_t level) {
  std::set<std::pair<std::size_t, std::size_t>> ref(
      reference.begin(), reference.begin() + level);
  std::size_t shared = 0;
  for (std::size_t i = 0; i < level; ++i)
    if (ref.count(candidate[i])) ++shared;
  return static_cast<double>(shared) / static_cast<double>(level);
}

}  // namespace detail

/// Refits the treelet on B row-resamples (with replacement) and reports how
/// reproducible the merge decisions are. Replicate b uses seed + b.
inline StabilityReport bootstrap_stability(const DataMatrix& x, std::size_t replicates,
                                           std::size_t levels, std::uint64_t seed,
                                           SimilarityKind kind = SimilarityKind::abs_correlation,
                                           std::size_t threads = 1) {
  if (replicates < 1) throw config_error("bootstrap_stability: need at least 1 replicate");
  const std::size_t n = x.rows(), p = x.cols();
  const TreeletModel original = fit(x, levels, kind);
  const auto original_pairs = detail::merge_pairs(original);

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> replicate_pairs(replicates);
  parallel_for(replicates, threads, [&](std::size_t b) {
    Rng rng(seed + b);
    DataMatrix resample(n, p);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = static_cast<std::size_t>(rng.bounded(n));
      for (std::size_t j = 0; j < p; ++j) resample(i, j) = x(src, j);
    }
    replicate_pairs[b] = detail::merge_pairs(fit(resample, levels, kind));
  });

  StabilityReport report;
  report.replicates = replicates;
  report.agreement.assign(levels, 0.0);
  report.co_merge = SymMatrix(p);
  for (std::size_t b = 0; b < replicates; ++b) {
    for (std::size_t l = 1; l <= levels; ++l)
      report.agreement[l - 1] +=
          detail::pair_agreement(original_pairs, replicate_pairs[b], l);
    for (const auto& [i, j] : replicate_pairs[b])
      report.co_merge.set(i, j, report.co_merge(i, j) + 1.0);
  }
  for (double& a : report.agreement) a /= static_cast<double>(replicates);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      report.co_merge.set(i, j, report.co_merge(i, j) / static_cast<double>(replicates));
  return report;
}

}  // namespace treelet
