#include "ringsim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace ringsim {

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("RING_SIM_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0)
        n = std::min(n, static_cast<std::size_t>(cap));
    } catch (const std::exception &) {
      // Unparseable values leave the default in place.
    }
  }
  return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)> &job) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error)
          first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back(worker);
  for (auto &t : pool)
    t.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

} // namespace ringsim
