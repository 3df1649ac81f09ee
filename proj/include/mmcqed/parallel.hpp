#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mmcqed {

/// Worker count from MMCQED_WORKERS, falling back to hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("MMCQED_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Run body(i) for i in [0, count) on up to `workers` threads. Tasks must not
/// share mutable state; the first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Pairwise (cascade) sum over items produced in index order.
template <typename T, typename Get>
T pairwise_sum(std::size_t begin, std::size_t end, const Get& get, const T& zero) {
  if (end <= begin) return zero;
  if (end - begin == 1) return get(begin);
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(begin, mid, get, zero) + pairwise_sum(mid, end, get, zero);
}

}  // namespace mmcqed
