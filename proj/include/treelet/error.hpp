#pragma once

#include <stdexcept>
#include <string>

namespace treelet {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input has the wrong dimensions (too few rows, mismatched columns, ...).
class shape_error : public error {
public:
  using error::error;
};

/// Input values are unusable (non-finite, degenerate labels, ...).
class data_error : public error {
public:
  using error::error;
};

/// A numeric routine cannot proceed (non-finite intermediate, no convergence).
class numeric_error : public error {
public:
  using error::error;
};

/// An index or size parameter is outside its valid range.
class range_error : public error {
public:
  using error::error;
};

/// A run configuration is inconsistent (bad grid, bad fold count, ...).
class config_error : public error {
public:
  using error::error;
};

/// File reading/writing failed or a file is malformed.
class io_error : public error {
public:
  using error::error;
};

}  // namespace treelet
