#pragma once

// Shared numeric kernels: Gauss-Legendre tensor quadrature, stratified Monte
// Carlo, Richardson-refined central differences, bisection, and a small
// deterministic parallel_for.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "torus_hall/errors.hpp"

namespace torus_hall::numerics {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once, so results written to slot i do not depend on the
/// thread count. The first exception thrown by any body is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline unsigned hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// Gauss-Legendre

/// Nodes and weights on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre order must be >= 1");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n == 1) {
    rule.nodes[0] = 0.5;
    rule.weights[0] = 1.0;
  }
  return rule;
}

/// Composite rule on [lo, hi]: `panels` equal panels of `order` nodes each.
inline QuadratureRule composite_rule(double lo, double hi, int order, int panels) {
  if (panels < 1) throw InvalidArgument("panel count must be >= 1");
  const QuadratureRule base = gauss_legendre_rule(order);
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(order) * panels);
  rule.weights.reserve(rule.nodes.capacity());
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(lo + width * (p + base.nodes[i]));
      rule.weights.push_back(width * base.weights[i]);
    }
  }
  return rule;
}

struct QuadratureSpec {
  int order_per_axis = 48;
  int panels_per_axis = 0;  // 0: chosen by the caller from the integrand scale, else 1
  std::int64_t max_evals = 4'000'000'000;

  void validate() const {
    if (order_per_axis < 4) throw InvalidArgument("quadrature order must be >= 4");
    if (panels_per_axis < 0) throw InvalidArgument("quadrature panels must be >= 0");
  }
  int panels() const { return std::max(1, panels_per_axis); }
  int nodes_per_axis() const { return order_per_axis * panels(); }
};

template <class F>
double integrate_1d(F&& f, double lo, double hi, int order = 48, int panels = 1) {
  const QuadratureRule rule = composite_rule(lo, hi, order, panels);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

/// Tensor-product Gauss-Legendre estimate of the integral of f over [0,1]^dims.
/// f is called with a std::span<const double> of length dims.
template <class F>
double gauss_legendre(F&& f, int dims, const QuadratureSpec& spec = {}, unsigned threads = 1) {
  spec.validate();
  if (dims < 1) throw InvalidArgument("quadrature needs dims >= 1");
  const int per_axis = spec.nodes_per_axis();
  const double total = std::pow(static_cast<double>(per_axis), dims);
  if (total > static_cast<double>(spec.max_evals)) {
    throw BudgetExceeded("tensor quadrature needs " + std::to_string(total) +
                         " evaluations, budget " + std::to_string(spec.max_evals));
  }
  const QuadratureRule rule = composite_rule(0.0, 1.0, spec.order_per_axis, spec.panels());
  const auto inner_count = static_cast<std::size_t>(total / per_axis + 0.5);

  std::vector<double> partial(per_axis, 0.0);
  parallel_for(per_axis, threads, [&](std::size_t outer) {
    std::vector<double> point(dims);
    std::vector<int> idx(dims, 0);
    point[0] = rule.nodes[outer];
    double sum = 0.0;
    for (std::size_t flat = 0; flat < inner_count; ++flat) {
      std::size_t rest = flat;
      double w = rule.weights[outer];
      for (int d = dims - 1; d >= 1; --d) {
        const std::size_t k = rest % per_axis;
        rest /= per_axis;
        point[d] = rule.nodes[k];
        w *= rule.weights[k];
      }
      sum += w * f(std::span<const double>(point));
    }
    partial[outer] = sum;
  });
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum;
}

// ---------------------------------------------------------------------------
// Monte Carlo

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream for work item `index` of a run seeded with `seed`.
inline std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index)));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct MCSpec {
  std::int64_t n_samples = 100'000;
  std::uint64_t seed = 0;
  int strata_per_axis = 4;

  void validate() const {
    if (n_samples < 1000) throw InvalidArgument("Monte Carlo needs n_samples >= 1000");
    if (strata_per_axis < 1) throw InvalidArgument("strata_per_axis must be >= 1");
  }
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Stratified uniform Monte Carlo over [0,1]^dims. The unit cube is cut into
/// strata_per_axis^dims equal cells (fewer if the sample count cannot give
/// every cell two samples); the error estimate comes from per-cell variances.
template <class F>
Estimate monte_carlo(F&& f, int dims, const MCSpec& spec, unsigned threads = 1) {
  spec.validate();
  if (dims < 1) throw InvalidArgument("Monte Carlo needs dims >= 1");
  int per_axis = spec.strata_per_axis;
  auto cells = [&](int s) { return std::pow(static_cast<double>(s), dims); };
  while (per_axis > 1 && 2.0 * cells(per_axis) > static_cast<double>(spec.n_samples)) --per_axis;
  const auto strata = static_cast<std::int64_t>(cells(per_axis) + 0.5);
  const std::int64_t base = spec.n_samples / strata;
  const std::int64_t extra = spec.n_samples % strata;

  std::vector<double> means(strata, 0.0);
  std::vector<double> vars(strata, 0.0);
  std::vector<std::int64_t> counts(strata, 0);
  parallel_for(static_cast<std::size_t>(strata), threads, [&](std::size_t h) {
    const std::int64_t n_h = base + (static_cast<std::int64_t>(h) < extra ? 1 : 0);
    std::vector<int> cell(dims);
    std::size_t rest = h;
    for (int d = 0; d < dims; ++d) {
      cell[d] = static_cast<int>(rest % per_axis);
      rest /= per_axis;
    }
    auto rng = stream_for(spec.seed, h);
    std::vector<double> point(dims);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t i = 0; i < n_h; ++i) {
      for (int d = 0; d < dims; ++d) point[d] = (cell[d] + uniform01(rng)) / per_axis;
      const double v = f(std::span<const double>(point));
      const double delta = v - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v - mean);
    }
    means[h] = mean;
    vars[h] = n_h > 1 ? m2 / static_cast<double>(n_h - 1) : 0.0;
    counts[h] = n_h;
  });

  Estimate est;
  double var = 0.0;
  const double inv_strata = 1.0 / static_cast<double>(strata);
  for (std::int64_t h = 0; h < strata; ++h) {
    est.mean += means[h] * inv_strata;
    if (counts[h] > 0) var += vars[h] * inv_strata * inv_strata / static_cast<double>(counts[h]);
  }
  est.std_error = std::sqrt(var);
  return est;
}

// ---------------------------------------------------------------------------
// Finite differences and root finding

// Step adjusted so that y + h is exactly representable and (y + h) - y == h.
inline double exact_step(double y, double h) {
  volatile double t = y + h;
  return t - y;
}

/// Central first difference at steps h and 2h, one Richardson step.
template <class F>
double first_derivative(F&& f, double y, double h = 1e-5) {
  h = exact_step(y, h);
  auto central = [&](double step) { return (f(y + step) - f(y - step)) / (2.0 * step); };
  return (4.0 * central(h) - central(2.0 * h)) / 3.0;
}

/// Central second difference at steps h and 2h, one Richardson step.
template <class F>
double second_derivative(F&& f, double y, double h = 1e-4) {
  h = exact_step(y, h);
  const double f0 = f(y);
  auto central = [&](double step) {
    return (f(y + step) - 2.0 * f0 + f(y - step)) / (step * step);
  };
  return (4.0 * central(h) - central(2.0 * h)) / 3.0;
}

/// Root of g in [lo, hi]; requires a sign change.
template <class G>
double bisect_root(G&& g, double lo, double hi, double tol = 1e-10) {
  double g_lo = g(lo);
  const double g_hi = g(hi);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if (!(g_lo * g_hi < 0.0)) {
    throw NoBracket("bisect_root: g(lo) and g(hi) have the same sign on [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
  }
  for (int iter = 0; iter < 400 && hi - lo > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (g_mid == 0.0) return mid;
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace torus_hall::numerics
