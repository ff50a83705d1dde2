#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace wsiroi::detail {

// Runs fn(index, worker) for index in [0, count) on up to `workers` threads.
// After the first failure no new indices are started; once all threads join,
// the exception of the lowest failing index is rethrown.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t, int)>& fn) {
  const int threads = static_cast<int>(std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i, 0);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i, w);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace wsiroi::detail
