#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace morpde {

/// Spatial vector of runtime dimension 1 or 2, stack-allocated (no heap).
using VecD = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
/// Small dense matrix matching VecD (Jacobians of flux maps).
using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline VecD vec1(double x) {
  VecD v(1);
  v << x;
  return v;
}

inline VecD vec2(double x, double y) {
  VecD v(2);
  v << x, y;
  return v;
}

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Conjugate bracket expansion exceeded the overflow guard: the function grows
/// too slowly (at most linearly) for its conjugate to be finite at this point.
struct growth_error : error {
  using error::error;
};

/// Coordinate ascent failed to certify a maximizer; carries the best value
/// found, which is always a valid lower bound for the supremum.
struct ascent_error : error {
  ascent_error(const std::string& what, double lower_bound)
      : error(what), best_lower_bound(lower_bound) {}
  double best_lower_bound;
};

/// A time step failed to converge; carries solver context for diagnosis.
struct step_error : error {
  step_error(const std::string& what, int time_index, double residual)
      : error(what), time_index(time_index), final_residual(residual) {}
  int time_index;
  double final_residual;
};

/// Configuration file problem (syntax or semantics).
struct config_error : error {
  using error::error;
};

/// A checker detected a violated invariant that the caller asked to enforce.
struct invariant_error : error {
  using error::error;
};

/// Number of workers for sample fan-out. Respects the MP_THREADS environment
/// variable; result is >= 1. Results never depend on this value: work is
/// partitioned into fixed chunks and merged in chunk order.
inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("MP_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = static_cast<int>(std::min<long>(v, 256));
  }
  return n;
}

/// Pairwise (tree) sum of a contiguous range. The reduction tree is fixed by
/// the range length alone, so results are identical run to run and do not
/// depend on threading.
inline double tree_sum(std::span<const double> v) {
  if (v.size() == 0) return 0.0;
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return v[0] + v[1];
  const std::size_t mid = v.size() / 2;
  return tree_sum(v.subspan(0, mid)) + tree_sum(v.subspan(mid));
}

/// Evaluates f(i) for i in [0, n) into a vector and tree-sums it.
template <class F>
double tree_sum_map(std::size_t n, F&& f) {
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = f(i);
  return tree_sum(vals);
}

/// Runs body(i) for i in [0, n) across workers. The loop body must write only
/// to its own index slot of any shared output; chunking is fixed (independent
/// of the worker count) so any ordered merge the caller performs afterwards is
/// deterministic.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const int workers = worker_count();
  if (workers <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t chunks = 64;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= chunks) return;
        const std::size_t lo = c * n / chunks, hi = (c + 1) * n / chunks;
        for (std::size_t i = lo; i < hi; ++i) body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace morpde
