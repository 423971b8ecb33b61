// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace incsplat {

// Process-wide default worker count. 0 means std::thread::hardware_concurrency().
inline std::atomic<int>& default_thread_count() {
  static std::atomic<int> count{0};
  return count;
}

inline int resolve_threads(int requested) {
  if (requested <= 0) requested = default_thread_count().load();
  if (requested <= 0) requested = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, requested);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with static contiguous chunks.
// Callers must write only to index-owned outputs; results are then independent of the
// thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(resolve_threads(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace incsplat
