#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "twostage/errors.hpp"

namespace twostage {

/// Runs fn(0..n_jobs-1) on up to `workers` threads. Jobs must write only to
/// their own output slots and draw randomness only from streams keyed by
/// the job index; under that discipline results are identical for every
/// worker count, including 1. The first exception thrown by a job is
/// rethrown after all threads join.
inline void parallel_for(int n_jobs, int workers, const std::function<void(int)>& fn) {
  if (n_jobs <= 0) return;
  if (workers <= 1 || n_jobs == 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  const int n_threads = std::min(workers, n_jobs);
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto body = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace twostage
