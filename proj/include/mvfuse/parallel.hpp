#pragma once

// Deterministic fork-join helper. Work is split into one contiguous chunk
// per worker, so results that are reduced in chunk order do not depend on
// scheduling (outputs are reproducible at a fixed thread count).

#include <functional>
#include <thread>
#include <vector>

namespace mvfuse {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Calls fn(chunk_index, begin, end) for each of `threads` contiguous chunks
// covering [0, n).
inline void parallel_chunks(long n, int threads,
                            const std::function<void(int, long, long)>& fn) {
  threads = resolve_threads(threads);
  if (n <= 0) return;
  if (threads > n) threads = static_cast<int>(n);
  if (threads <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; t++) {
    long begin = t * chunk;
    long end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mvfuse
