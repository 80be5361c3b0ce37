#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "treelet/error.hpp"

namespace treelet {

/// Dense row-major matrix of samples: n rows (observations) by p columns
/// (variables).
class DataMatrix {
public:
  DataMatrix() = default;

  DataMatrix(std::size_t n, std::size_t p, double fill = 0.0)
      : n_(n), p_(p), values_(n * p, fill) {}

  DataMatrix(std::size_t n, std::size_t p, std::vector<double> values)
      : n_(n), p_(p), values_(std::move(values)) {
    if (values_.size() != n_ * p_)
      throw shape_error("DataMatrix: value count does not match n*p");
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }

  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * p_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * p_ + j];
  }

  const double* row(std::size_t i) const { return values_.data() + i * p_; }
  double* row(std::size_t i) { return values_.data() + i * p_; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Throws data_error if any entry is NaN or infinite.
  void require_finite(const std::string& what = "matrix") const {
    if (!all_finite()) throw data_error(what + " contains non-finite values");
  }

  bool operator==(const DataMatrix& other) const {
    return n_ == other.n_ && p_ == other.p_ && values_ == other.values_;
  }

private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> values_;
};

/// Symmetric p-by-p matrix stored dense; writes through set() keep the two
/// mirrored entries bit-identical.
class SymMatrix {
public:
  SymMatrix() = default;

  explicit SymMatrix(std::size_t dim, double fill = 0.0)
      : dim_(dim), values_(dim * dim, fill) {}

  static SymMatrix identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.values_[i * dim + i] = 1.0;
    return m;
  }

  std::size_t dim() const { return dim_; }

  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * dim_ + j];
  }

  void set(std::size_t i, std::size_t j, double v) {
    values_[i * dim_ + j] = v;
    values_[j * dim_ + i] = v;
  }

  const std::vector<double>& values() const { return values_; }

  /// Direct element access for in-place kernels; callers are responsible for
  /// restoring symmetry before the matrix escapes.
  double& raw(std::size_t i, std::size_t j) { return values_[i * dim_ + j]; }

  bool is_symmetric() const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i + 1; j < dim_; ++j)
        if (values_[i * dim_ + j] != values_[j * dim_ + i]) return false;
    return true;
  }

  void require_symmetric(const std::string& what = "matrix") const {
    if (!is_symmetric()) throw data_error(what + " is not symmetric");
  }

  bool operator==(const SymMatrix& other) const {
    return dim_ == other.dim_ && values_ == other.values_;
  }

private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

}  // namespace treelet
