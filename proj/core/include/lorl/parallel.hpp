#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace lorl {

// Runs fn(0..count-1) across a small worker pool; results are collected by
// index, so the output order never depends on scheduling. threads <= 0 picks
// hardware concurrency. fn must be safe to call concurrently for distinct
// indices (give each index its own RngStream).
template <typename R>
std::vector<R> parallel_map(int count, int threads, const std::function<R(int)>& fn) {
  std::vector<R> out(count);
  if (count == 0) return out;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  workers = std::min(workers, count);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        out[i] = fn(i);
      }
    });
  for (std::thread& t : pool) t.join();
  return out;
}

}  // namespace lorl
