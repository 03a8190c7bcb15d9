#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace scf {

/// Worker cap from SCF_THREADS (default 1, invalid values fall back to 1).
inline unsigned worker_threads() {
  const char* env = std::getenv("SCF_THREADS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    return v >= 1 ? static_cast<unsigned>(std::min(v, 256L)) : 1u;
  } catch (...) {
    return 1;
  }
}

/// Runs body(i) for i in [0, n) over contiguous chunks. The body must only
/// write to per-index state, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = worker_threads()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace scf
