// SPDX-License-Identifier: Apache-2.0
//
// L^2(R^d) norm of a product of d extensions with separated supports.
// Two evaluations are kept side by side: the change of variables through
// the sum map (exact once the map is injective on the support box), and a
// grid sum over a truncation box whose spacing is fine enough that
// Poisson summation leaves no aliasing, so only the box tail is missing.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/engine.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/function.hpp"
#include "curvelab/jacobian.hpp"
#include "curvelab/quadrature.hpp"
#include "curvelab/random.hpp"

namespace curvelab {

struct MultilinearOptions {
  bool box_sum = true;
  double box_scale = 2560.0;  // truncation box [-R, R]^d with R = box_scale / lambda
  double alias_margin = 1.05;  // grid spacing 2 pi / (lambda W margin)
  std::size_t max_grid = 4'000'000;
  AdaptiveOptions jacobian_quadrature{1e-10, 30, 10};
  EngineOptions engine{};
};

struct MultilinearReport {
  double lhs = 0.0;          // box sum when enabled, else the change-of-variables value
  double bound = 0.0;
  double change_of_variables = 0.0;
  double box_value = 0.0;
  double box_radius = 0.0;
  double tail_estimate = 0.0;  // sqrt(max(0, cov^2 - box^2)), the mass outside the box
  double constant = 0.0;       // C in C L^{-(d^2-d)/4} lambda^{-d/2} prod ||f_i||_2
  double separation = 0.0;
  double class_distance = 0.0;
  std::size_t grid_points = 0;
  bool holds = true;
};

/// (2 pi)^{d/2} / sqrt(c_J) with c_J the Jacobian lower-bound constant.
inline double multilinear_constant(int d) {
  return std::pow(2.0 * std::numbers::pi, 0.5 * d) / std::sqrt(jacobian_lower_constant(d));
}

namespace detail {

// int over prod I_i of prod f_i(t_i)^2 / |det(gamma'(t_1), ..., gamma'(t_d))| dt.
inline double jacobian_integral(const CurveSpec& c, const std::vector<TestFunction>& fs, std::vector<double>& t,
                                const AdaptiveOptions& opt) {
  const std::size_t k = t.size(), d = fs.size();
  if (k == d) {
    Mat m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) m.col(static_cast<Eigen::Index>(i)) = c.derivative(t[i], 1);
    return 1.0 / std::abs(small_determinant(m));
  }
  const TestFunction& f = fs[k];
  const auto bp = f.breakpoints();
  double s = 0.0;
  for (std::size_t p = 0; p + 1 < bp.size(); ++p)
    s += integrate_adaptive(
        [&](double x) {
          const double v = f(x);
          if (v == 0.0) return 0.0;
          t.push_back(x);
          const double r = v * v * jacobian_integral(c, fs, t, opt);
          t.pop_back();
          return r;
        },
        bp[p], bp[p + 1], opt);
  return s;
}

}  // namespace detail

inline MultilinearReport multilinear_l2(const CurveSpec& c, const std::vector<TestFunction>& fs, double lambda,
                                        double L, const MultilinearOptions& opt = {}) {
  const int d = c.dimension();
  if (static_cast<int>(fs.size()) != d) throw DomainError("need exactly d functions");
  if (!(L > 0.0)) throw DomainError("separation L must be positive");
  if (!(lambda >= 1.0)) throw DomainError("lambda must be at least 1");
  MultilinearReport rep;
  rep.constant = multilinear_constant(d);
  rep.class_distance = class_distance(c).epsilon;
  double prod_norm = 1.0;
  for (const auto& f : fs) prod_norm *= f.norm(2.0);
  if (prod_norm == 0.0) return rep;

  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = i + 1; j < fs.size(); ++j) {
      const double gap = std::max(fs[j].lo() - fs[i].hi(), fs[i].lo() - fs[j].hi());
      sep = std::min(sep, gap);
    }
  rep.separation = sep;
  if (!(sep >= L))
    throw PreconditionError("supports are " + std::to_string(sep) + " apart, less than L = " + std::to_string(L));

  rep.bound = rep.constant * std::pow(L, -0.25 * (d * d - d)) * std::pow(lambda, -0.5 * d) * prod_norm;

  std::vector<double> t;
  const double jac = detail::jacobian_integral(c, fs, t, opt.jacobian_quadrature);
  rep.change_of_variables = std::pow(2.0 * std::numbers::pi / lambda, 0.5 * d) * std::sqrt(jac);
  rep.lhs = rep.change_of_variables;

  if (opt.box_sum) {
    const double R = opt.box_scale / lambda;
    rep.box_radius = R;
    TensorGrid g;
    double cell = 1.0;
    for (int j = 0; j < d; ++j) {
      // Width of the j-th coordinate of gamma(t_1) + ... + gamma(t_d) over the supports.
      double W = 0.0;
      for (const auto& f : fs) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int s = 0; s <= 1024; ++s) {
          const double v = c(f.lo() + (f.hi() - f.lo()) * s / 1024.0)(j);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        W += hi - lo;
      }
      W = std::max(W * opt.alias_margin, 1e-300);
      const double h = 2.0 * std::numbers::pi / (lambda * W);
      const auto n = static_cast<long>(std::floor(R / h));
      std::vector<double> ax;
      for (long k = -n; k <= n; ++k) ax.push_back(static_cast<double>(k) * h);
      cell *= h;
      g.axes.push_back(std::move(ax));
    }
    rep.grid_points = g.size();
    if (rep.grid_points > opt.max_grid)
      throw RefinementError("truncation grid needs " + std::to_string(rep.grid_points) + " points, cap " +
                            std::to_string(opt.max_grid));
    const TargetSet x = TargetSet::product(std::move(g));
    std::vector<Complex> prod(x.size(), Complex(1.0, 0.0));
    for (const auto& f : fs) {
      const auto r = extension_eval(c, f, lambda, x, opt.engine);
      for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= r.values[i];
    }
    long double s = 0.0L;
    for (const Complex& v : prod) s += std::norm(v);
    rep.box_value = std::sqrt(static_cast<double>(s) * cell);
    rep.tail_estimate = std::sqrt(std::max(0.0, rep.change_of_variables * rep.change_of_variables -
                                                    rep.box_value * rep.box_value));
    rep.lhs = rep.box_value;
  }
  rep.holds = std::max(rep.lhs, rep.change_of_variables) <= rep.bound;
  return rep;
}

/// d intervals in [0, 1] in increasing order with gaps at least L, each
/// carrying an indicator, a bump or a seeded trigonometric polynomial.
inline std::vector<TestFunction> random_separated_functions(Rng& rng, int d, double L) {
  if (d < 1) throw DomainError("dimension must be positive");
  if (!(L >= 0.0) || L * (d - 1) >= 1.0) throw DomainError("separation L leaves no room for d intervals");
  const double room = 1.0 - L * (d - 1);
  std::vector<double> cuts{0.0, room};
  for (int i = 0; i < 2 * d - 2; ++i) cuts.push_back(rng.uniform(0.0, room));
  std::sort(cuts.begin(), cuts.end());
  std::vector<TestFunction> fs;
  for (int i = 0; i < d; ++i) {
    const double a = cuts[2 * static_cast<std::size_t>(i)] + L * i;
    const double b = std::min(std::max(cuts[2 * static_cast<std::size_t>(i) + 1] + L * i, a + 1e-3), 1.0);
    const auto kind = rng.index(3);
    if (kind == 0)
      fs.push_back(TestFunction::indicator(a, b));
    else if (kind == 1)
      fs.push_back(TestFunction::bump(a, b, 2));
    else
      fs.push_back(TestFunction::random_trig_poly(rng.next(), 3, a, b));
  }
  return fs;
}

}  // namespace curvelab
