#pragma once

// Bounded worker pool over an index range.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tlseg/error.hpp"

namespace tlseg {

/// Calls f(i) for i in [0, n) on up to `threads` workers. If any call
/// throws, the exception from the lowest failing index is rethrown.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  if (threads < 1) throw ParameterError("parallel_for: threads must be >= 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Thread count from TLSEG_THREADS when set and valid, else 1.
inline int default_threads() {
  if (const char* env = std::getenv("TLSEG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace tlseg
