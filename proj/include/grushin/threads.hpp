#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace grushin {

/// Global worker cap (set once by the CLI from --threads; default: hardware).
inline int& thread_cap() {
  static int cap = static_cast<int>(std::thread::hardware_concurrency());
  return cap;
}

/// Parallel map over [0, n): each index is processed exactly once and must
/// write only to its own output slot. No reductions happen here, so results
/// are independent of the worker count; any accumulation over the outputs is
/// done afterwards by the caller in fixed index order.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  int workers = thread_cap();
  if (workers < 1) workers = 1;
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  int spawn = std::min<std::size_t>(workers, n);
  pool.reserve(spawn);
  for (int t = 0; t < spawn - 1; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

}  // namespace grushin
