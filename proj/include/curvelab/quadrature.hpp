// SPDX-License-Identifier: Apache-2.0
//
// Gauss-Legendre rules and an adaptive bisection integrator.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "curvelab/errors.hpp"

namespace curvelab {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

namespace detail {

inline GaussLegendre build_gauss_legendre(int n) {
  GaussLegendre r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = -x;
    r.nodes[hi] = x;
    r.weights[lo] = w;
    r.weights[hi] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

}  // namespace detail

inline constexpr int kMaxGaussOrder = 64;

/// Cached n-point rule, 1 <= n <= 64. Thread-safe (static init).
inline const GaussLegendre& gauss_legendre(int n) {
  static const std::array<GaussLegendre, kMaxGaussOrder + 1> table = [] {
    std::array<GaussLegendre, kMaxGaussOrder + 1> t{};
    for (int k = 1; k <= kMaxGaussOrder; ++k)
      t[static_cast<std::size_t>(k)] = detail::build_gauss_legendre(k);
    return t;
  }();
  if (n < 1 || n > kMaxGaussOrder) throw DomainError("Gauss-Legendre order out of range");
  return table[static_cast<std::size_t>(n)];
}

template <class F>
double gauss_panel(const F& f, double a, double b, int n = 10) {
  const GaussLegendre& g = gauss_legendre(n);
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(c + r * g.nodes[i]);
  return s * r;
}

struct AdaptiveOptions {
  double abs_tol = 1e-8;
  int max_depth = 20;
  int order = 10;
};

namespace detail {

template <class F>
double adaptive_step(const F& f, double a, double b, double whole, double tol, int depth,
                     const AdaptiveOptions& opt) {
  const double m = 0.5 * (a + b);
  const double left = gauss_panel(f, a, m, opt.order);
  const double right = gauss_panel(f, m, b, opt.order);
  const double err = std::abs(left + right - whole);
  // Roundoff floor: differences at the last few ulps are not resolvable.
  if (err <= tol || err <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right))
    return left + right;
  if (depth >= opt.max_depth)
    throw ToleranceError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], error estimate " + std::to_string(err));
  return adaptive_step(f, a, m, left, 0.5 * tol, depth + 1, opt) +
         adaptive_step(f, m, b, right, 0.5 * tol, depth + 1, opt);
}

}  // namespace detail

/// Integral of f over [a, b] by panel bisection; the tolerance is split
/// evenly between halves at every level.
template <class F>
double integrate_adaptive(const F& f, double a, double b, const AdaptiveOptions& opt = {}) {
  if (a == b) return 0.0;
  const double whole = gauss_panel(f, a, b, opt.order);
  return detail::adaptive_step(f, a, b, whole, opt.abs_tol, 0, opt);
}

}  // namespace curvelab
