#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace glovesgns::hogwild {

// Parameter access for a single trainer thread.
struct Exclusive {
  static double load(const double& x) { return x; }
  static void store(double& x, double v) { x = v; }
};

// Lock-free shared access. Relaxed atomics compile to plain moves on common
// hardware; concurrent updates may be lost, which Hogwild-style SGD tolerates.
struct Shared {
  static double load(const double& x) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  }
  static void store(double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); }
};

// Runs body(begin, end) over `threads` contiguous slices of [0, n) and
// rethrows the first exception raised by any worker.
template <typename Body>
void for_slices(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          body(n * t / threads, n * (t + 1) / threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace glovesgns::hogwild
