#pragma once

// Minimal fork-join helper. Work items write to disjoint slots, so results
// do not depend on the thread count; any cross-item reduction must be done
// by the caller in index order.

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mgraf {

inline int& max_threads_slot() {
  static int value = static_cast<int>(std::thread::hardware_concurrency());
  return value;
}

inline int max_threads() { return std::max(1, max_threads_slot()); }

inline void set_max_threads(int t) { max_threads_slot() = std::max(1, t); }

template <typename F>
void parallel_for(int begin, int end, F&& body) {
  const int count = end - begin;
  if (count <= 0) return;
  const int workers = std::min(max_threads(), count);
  if (workers == 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mgraf
