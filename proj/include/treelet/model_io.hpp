#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "treelet/error.hpp"
#include "treelet/treelet.hpp"

namespace treelet {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

/// 17 significant digits: enough for binary64 values to round-trip exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string model_to_string(const TreeletModel& model) {
  std::ostringstream out;
  out << "treelet-model " << kModelFormatVersion << ' ' << model.p() << ' '
      << model.max_level() << ' ' << to_string(model.similarity_kind()) << ' '
      << (model.centered_cov() ? "centered" : "raw") << '\n';
  for (const Rotation& r : model.rotations()) {
    out << r.level << ' ' << r.idx_a << ' ' << r.idx_b << ' '
        << detail::format_double(r.theta.theta) << ' ' << r.sum_idx << '\n';
  }
  return out.str();
}

inline TreeletModel model_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string magic, kind_str, center_str;
  int version = 0;
  std::size_t p = 0, levels = 0;
  if (!(in >> magic >> version >> p >> levels >> kind_str >> center_str) ||
      magic != "treelet-model")
    throw io_error("model file: bad header");
  if (version != kModelFormatVersion)
    throw io_error("model file: unsupported format version");
  if (p < 2 || levels > p - 1)
    throw io_error("model file: invalid dimensions");

  SimilarityKind kind;
  if (kind_str == "abs_correlation") kind = SimilarityKind::abs_correlation;
  else if (kind_str == "abs_covariance") kind = SimilarityKind::abs_covariance;
  else throw io_error("model file: unknown similarity kind");
  if (center_str != "centered" && center_str != "raw")
    throw io_error("model file: unknown centering flag");

  std::vector<Rotation> rotations;
  rotations.reserve(levels);
  std::vector<char> active(p, 1);
  std::vector<std::vector<std::uint32_t>> history;
  auto snapshot = [&]() {
    std::vector<std::uint32_t> act;
    for (std::size_t i = 0; i < p; ++i)
      if (active[i]) act.push_back(static_cast<std::uint32_t>(i));
    history.push_back(std::move(act));
  };
  snapshot();

  for (std::size_t m = 0; m < levels; ++m) {
    Rotation r;
    std::string theta_str;
    if (!(in >> r.level >> r.idx_a >> r.idx_b >> theta_str >> r.sum_idx))
      throw io_error("model file: truncated rotation list");
    r.theta.theta = std::strtod(theta_str.c_str(), nullptr);
    if (r.level != m + 1 || r.idx_a >= r.idx_b || r.idx_b >= p ||
        (r.sum_idx != r.idx_a && r.sum_idx != r.idx_b))
      throw io_error("model file: malformed rotation line");
    if (!active[r.idx_a] || !active[r.idx_b])
      throw io_error("model file: rotation re-merges a frozen coordinate");
    r.diff_idx = r.sum_idx == r.idx_a ? r.idx_b : r.idx_a;
    active[r.diff_idx] = 0;
    rotations.push_back(r);
    snapshot();
  }
  return TreeletModel(p, kind, center_str == "centered", std::move(rotations),
                      std::move(history));
}

inline void save_model(const TreeletModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open model file for writing: " + path);
  out << model_to_string(model);
  if (!out) throw io_error("failed writing model file: " + path);
}

inline TreeletModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_string(buf.str());
}

}  // namespace treelet
