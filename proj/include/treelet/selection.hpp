#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "treelet/baselines.hpp"
#include "treelet/error.hpp"
#include "treelet/matrix.hpp"
#include "treelet/model_io.hpp"
#include "treelet/parallel.hpp"
#include "treelet/rng.hpp"
#include "treelet/treelet.hpp"

namespace treelet {

/// Mean scores closer than this are treated as tied, so the tie rule
/// (smaller K, then smaller L) can prefer the parsimonious model when extra
/// vectors add nothing but numerical dust.
inline constexpr double kSelectionTieEps = 1e-9;

struct GridSpec {
  std::vector<std::size_t> levels;
  std::vector<std::size_t> ks;
  std::size_t folds = 5;
  std::uint64_t seed = 0;

  void validate(std::size_t n, std::size_t p) const {
    if (levels.empty() || ks.empty())
      throw config_error("grid: empty level or K list");
    for (std::size_t l : levels)
      if (l > p - 1) throw config_error("grid: level exceeds p-1");
    for (std::size_t k : ks)
      if (k < 1 || k > p) throw config_error("grid: K out of [1, p]");
    if (folds < 2) throw config_error("grid: need at least 2 folds");
    if (n / folds < 2)
      throw config_error("grid: a fold would have fewer than 2 rows");
  }
};

enum class SelectionCriterion { heldout_energy, cv_risk };
enum class PredictorKind { ridge, knn };

inline const char* to_string(SelectionCriterion c) {
  return c == SelectionCriterion::heldout_energy ? "heldout_energy" : "cv_risk";
}
inline const char* to_string(PredictorKind k) {
  return k == PredictorKind::ridge ? "ridge" : "knn";
}

struct CellScore {
  std::size_t level = 0;
  std::size_t k = 0;
  std::size_t fold = 0;
  double score = 0.0;
};

struct MeanScore {
  std::size_t level = 0;
  std::size_t k = 0;
  double score = 0.0;
};

struct SelectionReport {
  SelectionCriterion criterion = SelectionCriterion::heldout_energy;
  bool has_predictor = false;
  PredictorKind predictor = PredictorKind::ridge;
  std::vector<CellScore> rows;    // per (L, K, fold)
  std::vector<MeanScore> means;   // per (L, K)
  std::size_t chosen_level = 0;
  std::size_t chosen_k = 0;
  double chosen_score = 0.0;
};

/// Deterministic fold assignment: seeded shuffle of the row indices, then
/// round-robin. Fold sizes differ by at most one.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds,
                                                std::uint64_t seed) {
  if (folds < 2) throw config_error("fold_assignment: need at least 2 folds");
  if (folds > n) throw config_error("fold_assignment: more folds than rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

namespace detail {

inline DataMatrix take_rows(const DataMatrix& x, const std::vector<std::size_t>& fold,
                            std::size_t which, bool in_fold) {
  std::vector<double> values;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if ((fold[i] == which) != in_fold) continue;
    values.insert(values.end(), x.row(i), x.row(i) + x.cols());
    ++count;
  }
  return DataMatrix(count, x.cols(), std::move(values));
}

inline std::vector<double> take_values(const std::vector<double>& y,
                                       const std::vector<std::size_t>& fold,
                                       std::size_t which, bool in_fold) {
  std::vector<double> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if ((fold[i] == which) == in_fold) out.push_back(y[i]);
  return out;
}

/// Basis-vector order by descending training energy, ties to lower index.
inline std::vector<std::size_t> energy_order(const std::vector<double>& energy) {
  std::vector<std::size_t> order(energy.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
  return order;
}

/// Picks the optimum of the mean scores: largest (or smallest) wins, and any
/// cell within the tie tolerance competes on (smaller K, smaller L).
inline void choose_cell(SelectionReport& report, bool maximize) {
  double best = report.means.front().score;
  for (const MeanScore& m : report.means)
    best = maximize ? std::max(best, m.score) : std::min(best, m.score);
  const double eps = kSelectionTieEps * std::max(1.0, std::fabs(best));
  bool have = false;
  for (const MeanScore& m : report.means) {
    const bool tied = maximize ? m.score >= best - eps : m.score <= best + eps;
    if (!tied) continue;
    if (!have || m.k < report.chosen_k ||
        (m.k == report.chosen_k && m.level < report.chosen_level)) {
      report.chosen_level = m.level;
      report.chosen_k = m.k;
      report.chosen_score = m.score;
      have = true;
    }
  }
}

inline void finish_report(SelectionReport& report, const GridSpec& grid,
                          bool maximize) {
  for (std::size_t l : grid.levels) {
    for (std::size_t k : grid.ks) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const CellScore& row : report.rows) {
        if (row.level == l && row.k == k) {
          sum += row.score;
          ++count;
        }
      }
      report.means.push_back(MeanScore{l, k, sum / static_cast<double>(count)});
    }
  }
  choose_cell(report, maximize);
}

}  // namespace detail

/// Unsupervised selection of (L, K): per fold, fit the treelet on the
/// training rows, keep the K basis vectors with the highest training energy,
/// and score the normalized energy those frozen vectors capture on the
/// held-out rows. Chooses the grid cell with the highest mean score.
inline SelectionReport cv_energy(const DataMatrix& x, const GridSpec& grid,
                                 SimilarityKind kind = SimilarityKind::abs_correlation,
                                 std::size_t threads = 1) {
  grid.validate(x.rows(), x.cols());
  const std::vector<std::size_t> fold = fold_assignment(x.rows(), grid.folds, grid.seed);
  const std::size_t max_level = *std::max_element(grid.levels.begin(), grid.levels.end());

  std::vector<std::vector<CellScore>> fold_rows(grid.folds);
  parallel_for(grid.folds, threads, [&](std::size_t v) {
    const DataMatrix train = detail::take_rows(x, fold, v, false);
    const DataMatrix test = detail::take_rows(x, fold, v, true);
    const TreeletModel model = fit(train, max_level, kind);
    for (std::size_t l : grid.levels) {
      const OrthonormalBasis basis = basis_at(model, l);
      const EnergyScore train_energy = energy_score(train, basis);
      const EnergyScore test_energy = energy_score(test, basis);
      const std::vector<std::size_t> order =
          detail::energy_order(train_energy.per_vector_energy);
      for (std::size_t k : grid.ks) {
        double captured = 0.0;
        for (std::size_t i = 0; i < k; ++i)
          captured += test_energy.per_vector_energy[order[i]];
        const double score =
            test_energy.total_energy > 0.0 ? captured / test_energy.total_energy : 0.0;
        fold_rows[v].push_back(CellScore{l, k, v, score});
      }
    }
  });

  SelectionReport report;
  report.criterion = SelectionCriterion::heldout_energy;
  for (std::size_t l : grid.levels)
    for (std::size_t k : grid.ks)
      for (std::size_t v = 0; v < grid.folds; ++v)
        for (const CellScore& row : fold_rows[v])
          if (row.level == l && row.k == k) report.rows.push_back(row);
  detail::finish_report(report, grid, /*maximize=*/true);
  return report;
}

struct RidgeModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Ridge regression by the normal equations with an eigenvalue solve; the
/// intercept is handled by centering and left unpenalized. lambda == 0 falls
/// back to the minimum-norm least-squares solution.
inline RidgeModel ridge_fit(const DataMatrix& features, const std::vector<double>& y,
                            double lambda) {
  const std::size_t n = features.rows(), k = features.cols();
  if (y.size() != n) throw shape_error("ridge_fit: outcome length mismatch");
  if (n == 0 || k == 0) throw shape_error("ridge_fit: empty system");
  if (!(lambda >= 0.0)) throw config_error("ridge_fit: lambda must be >= 0");

  std::vector<double> f_mean(k, 0.0);
  double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) f_mean[j] += features(i, j);
  for (double& m : f_mean) m /= static_cast<double>(n);

  SymMatrix gram(k);
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const double da = features(i, a) - f_mean[a];
      rhs[a] += da * (y[i] - y_mean);
      for (std::size_t b = a; b < k; ++b)
        gram.raw(a, b) += da * (features(i, b) - f_mean[b]);
    }
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) gram.set(a, b, gram.raw(a, b));

  double fro = 0.0;
  for (double v : gram.values()) fro += v * v;
  const SymEigen eig = sym_eigen(gram, std::max(1e-11, 1e-14 * std::sqrt(fro)));

  RidgeModel model;
  model.weights.assign(k, 0.0);
  const double eig_max = eig.values.empty() ? 0.0 : std::max(eig.values.front(), 0.0);
  for (std::size_t e = 0; e < k; ++e) {
    double inv;
    if (lambda > 0.0) {
      inv = 1.0 / (eig.values[e] + lambda);
    } else {
      // pseudo-inverse: drop numerically-zero directions
      inv = eig.values[e] > 1e-12 * std::max(eig_max, 1.0) ? 1.0 / eig.values[e] : 0.0;
    }
    double proj = 0.0;
    for (std::size_t j = 0; j < k; ++j) proj += eig.vectors(j, e) * rhs[j];
    proj *= inv;
    for (std::size_t j = 0; j < k; ++j) model.weights[j] += eig.vectors(j, e) * proj;
  }
  model.intercept = y_mean;
  for (std::size_t j = 0; j < k; ++j) model.intercept -= model.weights[j] * f_mean[j];
  return model;
}

inline std::vector<double> ridge_predict(const RidgeModel& model,
                                         const DataMatrix& features) {
  if (features.cols() != model.weights.size())
    throw shape_error("ridge_predict: feature count mismatch");
  std::vector<double> out(features.rows(), model.intercept);
  for (std::size_t i = 0; i < features.rows(); ++i)
    for (std::size_t j = 0; j < features.cols(); ++j)
      out[i] += model.weights[j] * features(i, j);
  return out;
}

/// Euclidean k-nearest-neighbor classification with majority vote; vote ties
/// go to the label of the nearest neighbor among the tied classes.
inline std::vector<double> knn_predict(const DataMatrix& train_features,
                                       const std::vector<double>& train_labels,
                                       const DataMatrix& test_features,
                                       std::size_t k) {
  const std::size_t m = train_features.rows();
  if (m == 0) throw shape_error("knn_predict: empty training set");
  if (train_labels.size() != m) throw shape_error("knn_predict: label count mismatch");
  if (test_features.cols() != train_features.cols())
    throw shape_error("knn_predict: feature count mismatch");
  if (k < 1 || k > m) throw range_error("knn_predict: k out of [1, train size]");

  std::vector<double> out(test_features.rows(), 0.0);
  std::vector<std::pair<double, std::size_t>> dist(m);
  for (std::size_t q = 0; q < test_features.rows(); ++q) {
    for (std::size_t i = 0; i < m; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < train_features.cols(); ++j) {
        const double diff = test_features(q, j) - train_features(i, j);
        d2 += diff * diff;
      }
      dist[i] = {d2, i};
    }
    std::sort(dist.begin(), dist.end());

    std::vector<double> labels;
    std::vector<std::size_t> votes;
    for (std::size_t i = 0; i < k; ++i) {
      const double label = train_labels[dist[i].second];
      auto it = std::find(labels.begin(), labels.end(), label);
      if (it == labels.end()) {
        labels.push_back(label);
        votes.push_back(1);
      } else {
        ++votes[static_cast<std::size_t>(it - labels.begin())];
      }
    }
    const std::size_t top = *std::max_element(votes.begin(), votes.end());
    std::set<double> tied;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (votes[i] == top) tied.insert(labels[i]);
    if (tied.size() == 1) {
      out[q] = *tied.begin();
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        const double label = train_labels[dist[i].second];
        if (tied.count(label)) {
          out[q] = label;
          break;
        }
      }
    }
  }
  return out;
}

struct PredictorParams {
  double ridge_lambda = 1e-3;
  std::size_t knn_k = 5;
};

/// Supervised selection of (L, K): per fold, fit treelet and best-K on the
/// training rows, map both splits to K features, fit the predictor on the
/// training side and score the held-out side (MSE for ridge,
/// misclassification rate for knn). Chooses the cell with the lowest mean.
inline SelectionReport cv_risk(const DataMatrix& x, const std::vector<double>& y,
                               const GridSpec& grid, PredictorKind predictor,
                               SimilarityKind kind = SimilarityKind::abs_correlation,
                               const PredictorParams& params = {},
                               std::size_t threads = 1) {
  grid.validate(x.rows(), x.cols());
  if (y.size() != x.rows()) throw shape_error("cv_risk: outcome length mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw data_error("cv_risk: non-finite outcome");
  if (predictor == PredictorKind::knn) {
    const std::set<double> distinct(y.begin(), y.end());
    if (distinct.size() < 2)
      throw data_error("cv_risk: constant labels are degenerate for knn");
  }

  const std::vector<std::size_t> fold = fold_assignment(x.rows(), grid.folds, grid.seed);
  const std::size_t max_level = *std::max_element(grid.levels.begin(), grid.levels.end());

  std::vector<std::vector<CellScore>> fold_rows(grid.folds);
  parallel_for(grid.folds, threads, [&](std::size_t v) {
    const DataMatrix train = detail::take_rows(x, fold, v, false);
    const DataMatrix test = detail::take_rows(x, fold, v, true);
    const std::vector<double> y_train = detail::take_values(y, fold, v, false);
    const std::vector<double> y_test = detail::take_values(y, fold, v, true);
    const TreeletModel model = fit(train, max_level, kind);

    for (std::size_t l : grid.levels) {
      const OrthonormalBasis basis = basis_at(model, l);
      const EnergyScore train_energy = energy_score(train, basis);
      const std::vector<std::size_t> order =
          detail::energy_order(train_energy.per_vector_energy);

      const DataMatrix train_coef = forward(model, l, train);
      const DataMatrix test_coef = forward(model, l, test);

      for (std::size_t k : grid.ks) {
        std::vector<std::size_t> chosen(order.begin(), order.begin() + k);
        std::sort(chosen.begin(), chosen.end());
        DataMatrix f_train(train.rows(), k), f_test(test.rows(), k);
        for (std::size_t i = 0; i < train.rows(); ++i)
          for (std::size_t j = 0; j < k; ++j) f_train(i, j) = train_coef(i, chosen[j]);
        for (std::size_t i = 0; i < test.rows(); ++i)
          for (std::size_t j = 0; j < k; ++j) f_test(i, j) = test_coef(i, chosen[j]);

        double risk;
        if (predictor == PredictorKind::ridge) {
          const RidgeModel rm = ridge_fit(f_train, y_train, params.ridge_lambda);
          const std::vector<double> pred = ridge_predict(rm, f_test);
          double sum = 0.0;
          for (std::size_t i = 0; i < pred.size(); ++i) {
            const double e = pred[i] - y_test[i];
            sum += e * e;
          }
          risk = sum / static_cast<double>(pred.size());
        } else {
          const std::size_t knn_k = std::min(params.knn_k, train.rows());
          const std::vector<double> pred = knn_predict(f_train, y_train, f_test, knn_k);
          std::size_t wrong = 0;
          for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] != y_test[i]) ++wrong;
          risk = static_cast<double>(wrong) / static_cast<double>(pred.size());
        }
        fold_rows[v].push_back(CellScore{l, k, v, risk});
      }
    }
  });

  SelectionReport report;
  report.criterion = SelectionCriterion::cv_risk;
  report.has_predictor = true;
  report.predictor = predictor;
  for (std::size_t l : grid.levels)
    for (std::size_t k : grid.ks)
      for (std::size_t v = 0; v < grid.folds; ++v)
        for (const CellScore& row : fold_rows[v])
          if (row.level == l && row.k == k) report.rows.push_back(row);
  detail::finish_report(report, grid, /*maximize=*/false);
  return report;
}

/// Long-format CSV: one row per (L, K, fold), the per-cell means, and a final
/// summary row with the chosen pair.
inline std::string report_to_csv(const SelectionReport& report) {
  std::ostringstream out;
  out << "L,K,fold,score\n";
  for (const CellScore& row : report.rows)
    out << row.level << ',' << row.k << ',' << row.fold << ','
        << detail::format_double(row.score) << '\n';
  for (const MeanScore& m : report.means)
    out << m.level << ',' << m.k << ",mean," << detail::format_double(m.score) << '\n';
  out << report.chosen_level << ',' << report.chosen_k << ",chosen,"
      << detail::format_double(report.chosen_score) << '\n';
  return out.str();
}

}  // namespace treelet
