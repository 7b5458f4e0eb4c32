#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace eftlab {

// Runs fn(0..n_cells) on a bounded worker pool. Each cell owns its state and
// writes into its own result slot, so outputs are independent of scheduling.
// The first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n_cells, std::size_t max_workers,
                         const std::function<void(std::size_t)>& fn) {
  if (n_cells == 0) return;
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t workers = std::min({n_cells, max_workers == 0 ? hw : max_workers});
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_cells; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n_cells) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace eftlab
