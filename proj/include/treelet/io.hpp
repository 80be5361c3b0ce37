#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/matrix.hpp"
#include "treelet/model_io.hpp"

namespace treelet {

/// A data matrix plus its column names (CSV header; synthesized as v1..vp
/// when the source format carries none).
struct NamedMatrix {
  DataMatrix data;
  std::vector<std::string> names;
};

inline std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names(p);
  for (std::size_t j = 0; j < p; ++j) names[j] = "v" + std::to_string(j + 1);
  return names;
}

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline void append_u16_le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t read_u64_le(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace detail

inline constexpr std::uint16_t kMatrixFormatVersion = 1;

/// Binary matrix layout: magic "TLMX", u16 version, u64 n, u64 p, then n*p
/// little-endian IEEE-754 doubles, row-major. Round-trips are bit-exact.
inline std::string matrix_to_binary(const DataMatrix& m) {
  std::string out;
  out.reserve(4 + 2 + 16 + m.values().size() * 8);
  out += "TLMX";
  detail::append_u16_le(out, kMatrixFormatVersion);
  detail::append_u64_le(out, m.rows());
  detail::append_u64_le(out, m.cols());
  for (double v : m.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    detail::append_u64_le(out, bits);
  }
  return out;
}

inline DataMatrix matrix_from_binary(const std::string& buf) {
  if (buf.size() < 22 || buf.compare(0, 4, "TLMX") != 0)
    throw io_error("binary matrix: bad magic");
  const auto* b = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint16_t version = static_cast<std::uint16_t>(b[4] | (b[5] << 8));
  if (version != kMatrixFormatVersion)
    throw io_error("binary matrix: unsupported version");
  const std::uint64_t n = detail::read_u64_le(b + 6);
  const std::uint64_t p = detail::read_u64_le(b + 14);
  if (buf.size() != 22 + n * p * 8)
    throw io_error("binary matrix: size does not match header");
  std::vector<double> values(n * p);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = detail::read_u64_le(b + 22 + i * 8);
    std::memcpy(&values[i], &bits, 8);
  }
  return DataMatrix(n, p, std::move(values));
}

/// CSV layout: header row of variable names, one sample per row, values with
/// 17 significant digits (exact double round-trip).
inline std::string matrix_to_csv(const DataMatrix& m,
                                 const std::vector<std::string>& names) {
  if (names.size() != m.cols())
    throw shape_error("matrix_to_csv: name count does not match columns");
  std::ostringstream out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << names[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
  return out.str();
}

inline NamedMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw io_error("csv matrix: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  NamedMatrix out;
  std::istringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) out.names.push_back(field);
  const std::size_t p = out.names.size();
  if (p == 0) throw io_error("csv matrix: empty header");

  std::vector<double> values;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t count = 0;
    while (std::getline(row, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) throw io_error("csv matrix: unparseable value '" + field + "'");
      values.push_back(v);
      ++count;
    }
    if (count != p) throw io_error("csv matrix: ragged row");
    ++n;
  }
  out.data = DataMatrix(n, p, std::move(values));
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << content;
  if (!out) throw io_error("failed writing file: " + path);
}

/// Format by extension: ".csv" is the text format, everything else binary.
inline void write_matrix(const std::string& path, const DataMatrix& m,
                         const std::vector<std::string>& names = {}) {
  if (detail::ends_with(path, ".csv")) {
    write_file(path, matrix_to_csv(m, names.empty() ? default_names(m.cols()) : names));
  } else {
    write_file(path, matrix_to_binary(m));
  }
}

inline NamedMatrix read_matrix(const std::string& path) {
  const std::string buf = read_file(path);
  if (detail::ends_with(path, ".csv")) {
    NamedMatrix m = matrix_from_csv(buf);
    m.data.require_finite("matrix file " + path);
    return m;
  }
  NamedMatrix m{matrix_from_binary(buf), {}};
  m.names = default_names(m.data.cols());
  m.data.require_finite("matrix file " + path);
  return m;
}

/// Sidecar metadata: sorted key=value lines next to a generated dataset.
inline void write_metadata(const std::string& path,
                           const std::map<std::string, std::string>& entries) {
  std::ostringstream out;
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  write_file(path, out.str());
}

inline std::map<std::string, std::string> read_metadata(const std::string& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw io_error("metadata: malformed line '" + line + "'");
    entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return entries;
}

}  // namespace treelet
