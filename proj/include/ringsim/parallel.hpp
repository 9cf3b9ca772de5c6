#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ringsim {

/// Worker count: hardware concurrency, capped by RING_SIM_THREADS when set
/// to a positive integer. Never less than 1.
std::size_t worker_count();

/// Runs job(0..count-1) on up to worker_count() threads. Each index runs
/// exactly once; the first exception thrown by a job is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &job);

/// Maps job over 0..count-1 in parallel, returning results in index order.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)> &job) {
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = job(i); });
  return out;
}

} // namespace ringsim
