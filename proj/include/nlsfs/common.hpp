#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nlsfs {

using cplx = std::complex<double>;
using std::numbers::pi;

inline constexpr cplx I{0.0, 1.0};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// principal branch i^z = exp(i pi z / 2)
inline cplx ipow(double z) { return std::polar(1.0, 0.5 * pi * z); }

// principal branch of w^z for complex w, arg in (-pi, pi]
inline cplx cpow_principal(cplx w, double z) {
  double r = std::abs(w);
  if (r == 0.0) return 0.0;
  double a = std::arg(w);
  if (a == -pi) a = pi;
  return std::polar(std::pow(r, z), a * z);
}

inline double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> v{0};
  return v;
}
}  // namespace detail

// NLSFS_THREADS sets the default; set_threads() (the --threads flag) wins
inline void set_threads(int n) { detail::thread_override() = n; }

inline int thread_count() {
  int n = detail::thread_override();
  if (n > 0) return n;
  if (const char* env = std::getenv("NLSFS_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Static contiguous partition, so reductions done per index stay deterministic.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  int nt = std::min<std::size_t>(thread_count(), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  for (int w = 0; w < nt; ++w) {
    pool.emplace_back([&, w] {
      try {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace nlsfs
