#pragma once

// Minimal worker pool for embarrassingly parallel index ranges, plus the
// compensated accumulator used for scheduling-independent reductions.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "wigner/errors.hpp"

namespace wigner {

inline int hardware_workers() {
  const unsigned h = std::thread::hardware_concurrency();
  return h ? static_cast<int>(h) : 1;
}

// Runs fn(i) for every i in [0, count). Work items must touch disjoint
// state; execution order is unspecified, so callers own any order-sensitive
// reduction. The first exception wins and is rethrown after the join.
inline void parallel_for(int workers, std::size_t count,
                         const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ArgumentError("workers must be >= 1");
  if (count == 0) return;
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
        break;
      }
    }
  };
  std::vector<std::thread> crew;
  crew.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) crew.emplace_back(body);
  for (auto& th : crew) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Kahan compensated sum; used wherever a reduction must not depend on
// worker count or scheduling.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace wigner
