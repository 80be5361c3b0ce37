#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace treelet {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to preallocated per-index slots so the outcome does not depend on
/// scheduling order.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace treelet
