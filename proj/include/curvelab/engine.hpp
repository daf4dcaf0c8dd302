// SPDX-License-Identifier: Apache-2.0
//
// Evaluation of the extension operator
//   T f(x) = int_0^1 exp(i lambda x . gamma(t)) f(t) [w(t)] dt
// by direct summation over Gauss-Legendre panels sized to the worst-case
// phase speed, with compensated accumulation and a partition-independent
// parallel schedule.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/function.hpp"
#include "curvelab/measure.hpp"
#include "curvelab/quadrature.hpp"

namespace curvelab {

using Complex = std::complex<double>;

struct EngineOptions {
  double nodes_per_wavelength = 10.0;
  int panel_order = 16;
  std::size_t max_nodes = 1'000'000;
  unsigned workers = 1;  // 0 selects the hardware concurrency
  bool self_check = true;
  std::size_t self_check_stride = 100;  // every stride-th target is rechecked
  double self_check_tol = 1e-6;
  int grading_levels = 40;
};

inline constexpr double kSpeedSafety = 1.25;
inline constexpr int kSpeedSamples = 257;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::pair<double, double>> panels;
  double nodes_per_wavelength = 0.0;
  double frequency = 0.0;       // angular frequency bound in t
  double declared_error = 0.0;  // Gauss-Legendre remainder over the uniform panels
  std::size_t graded_panels = 0;
  std::size_t size() const noexcept { return nodes.size(); }
};

/// Sampled sup |gamma'| on [lo, hi] with a safety factor.
inline double speed_bound(const CurveSpec& c, double lo, double hi) {
  double s = 0.0;
  for (int i = 0; i < kSpeedSamples; ++i) {
    const double t = lo + (hi - lo) * i / (kSpeedSamples - 1.0);
    s = std::max(s, c.derivative(t, 1).norm());
  }
  return kSpeedSafety * s;
}

/// Zeros of the torsion in [lo, hi]: sign changes, vanishing endpoints and
/// near-vanishing local minima.
inline std::vector<double> weight_zeros(const CurveSpec& c, double lo, double hi) {
  constexpr int n = 2048;
  std::vector<double> t(n + 1), v(n + 1);
  double vmax = 0.0;
  for (int i = 0; i <= n; ++i) {
    t[i] = lo + (hi - lo) * i / n;
    v[i] = torsion(c, t[i]);
    vmax = std::max(vmax, std::abs(v[i]));
  }
  std::vector<double> z;
  if (vmax == 0.0) return z;
  const double tiny = 1e-10 * vmax;
  if (std::abs(v[0]) <= tiny) z.push_back(lo);
  if (std::abs(v[n]) <= tiny) z.push_back(hi);
  for (int i = 1; i < n; ++i)
    if (std::abs(v[i]) <= tiny) z.push_back(t[i]);
  for (int i = 0; i < n; ++i) {
    if (v[i] * v[i + 1] < 0.0) {
      double a = t[i], b = t[i + 1], fa = v[i];
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b), fm = torsion(c, m);
        if (fm * fa <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      z.push_back(0.5 * (a + b));
    }
  }
  for (int i = 1; i < n; ++i) {
    const double a = std::abs(v[i]);
    if (a <= std::abs(v[i - 1]) && a <= std::abs(v[i + 1]) && a > tiny && a <= 1e-6 * vmax && v[i - 1] * v[i + 1] > 0.0) {
      double x0 = t[i - 1], x1 = t[i + 1];
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 120; ++it) {
        const double p = x1 - g * (x1 - x0), q = x0 + g * (x1 - x0);
        if (std::abs(torsion(c, p)) < std::abs(torsion(c, q)))
          x1 = q;
        else
          x0 = p;
      }
      z.push_back(0.5 * (x0 + x1));
    }
  }
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), z.end());
  return z;
}

namespace detail {

inline double log_panel_remainder(int n, double width, double freq) {
  // (b-a)^(2n+1) (n!)^4 / ((2n+1) ((2n)!)^3) * freq^(2n).
  return (2.0 * n + 1.0) * std::log(width) + 4.0 * std::lgamma(n + 1.0) - std::log(2.0 * n + 1.0) -
         3.0 * std::lgamma(2.0 * n + 1.0) + 2.0 * n * std::log(std::max(freq, 1.0));
}

}  // namespace detail

/// Panels on the support of f resolving `frequency` with the requested
/// nodes per wavelength; when `graded`, panels next to weight zeros are
/// split geometrically with ratio 2.
inline QuadratureRule build_rule(const CurveSpec& c, const TestFunction& f, double frequency, bool graded,
                                 const EngineOptions& opt) {
  QuadratureRule r;
  r.nodes_per_wavelength = opt.nodes_per_wavelength;
  r.frequency = frequency;
  if (f.is_zero()) return r;
  std::vector<double> bp = f.breakpoints();
  std::vector<double> zeros;
  if (graded) {
    zeros = weight_zeros(c, f.lo(), f.hi());
    bp.insert(bp.end(), zeros.begin(), zeros.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  }
  auto is_zero = [&](double x) {
    return std::any_of(zeros.begin(), zeros.end(), [&](double z) { return std::abs(z - x) < 1e-12; });
  };
  const int order = opt.panel_order;
  const double per_panel = order / opt.nodes_per_wavelength;  // wavelengths per panel
  std::size_t needed = 0;
  std::vector<std::size_t> counts;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double len = bp[s + 1] - bp[s];
    const double waves = len * frequency / (2.0 * std::numbers::pi);
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(waves / per_panel)));
    counts.push_back(n);
    needed += n * static_cast<std::size_t>(order);
  }
  if (graded) needed += zeros.size() * 2 * static_cast<std::size_t>(opt.grading_levels + 1) * order;
  if (needed > opt.max_nodes) {
    std::ostringstream os;
    os << "quadrature budget exceeded: " << needed << " nodes needed for angular frequency " << frequency
       << " at " << opt.nodes_per_wavelength << " nodes per wavelength, cap " << opt.max_nodes;
    throw RefinementError(os.str());
  }
  double log_err = -std::numeric_limits<double>::infinity();
  auto add_log = [&](double v) {
    log_err = std::max(log_err, v) + std::log1p(std::exp(-std::abs(log_err - v)));
  };
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double a = bp[s], b = bp[s + 1];
    const std::size_t n = counts[s];
    const double w = (b - a) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double x0 = a + w * static_cast<double>(k), x1 = (k + 1 == n) ? b : x0 + w;
      const bool left = k == 0 && is_zero(a), right = k + 1 == n && is_zero(b);
      if (!left && !right) {
        r.panels.emplace_back(x0, x1);
        add_log(detail::log_panel_remainder(order, x1 - x0, frequency));
        continue;
      }
      // Geometric split toward the zero end(s).
      std::vector<double> cuts{x0, x1};
      if (left && right) cuts.push_back(0.5 * (x0 + x1));
      const double mid = (left && right) ? 0.5 * (x0 + x1) : 0.0;
      if (left) {
        const double top = right ? mid : x1;
        for (int l = 1; l <= opt.grading_levels; ++l) cuts.push_back(x0 + (top - x0) * std::ldexp(1.0, -l));
      }
      if (right) {
        const double bot = left ? mid : x0;
        for (int l = 1; l <= opt.grading_levels; ++l) cuts.push_back(x1 - (x1 - bot) * std::ldexp(1.0, -l));
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        r.panels.emplace_back(cuts[i], cuts[i + 1]);
        ++r.graded_panels;
      }
    }
  }
  const GaussLegendre& gl = gauss_legendre(order);
  for (const auto& [x0, x1] : r.panels) {
    const double h = 0.5 * (x1 - x0), m = 0.5 * (x0 + x1);
    for (int i = 0; i < order; ++i) {
      r.nodes.push_back(m + h * gl.nodes[static_cast<std::size_t>(i)]);
      r.weights.push_back(h * gl.weights[static_cast<std::size_t>(i)]);
    }
  }
  r.declared_error = std::isfinite(log_err) ? std::exp(log_err) : 0.0;
  return r;
}

/// Evaluation targets: a free point list, or the atoms of a measure,
/// optionally pushed through a linear map x = L y.
class TargetSet {
 public:
  static TargetSet points(int d, std::vector<double> flat) {
    if (d < 1 || flat.size() % static_cast<std::size_t>(d) != 0) throw DomainError("malformed target list");
    for (double v : flat)
      if (!std::isfinite(v)) throw DomainError("target coordinates must be finite");
    TargetSet t;
    t.d_ = d;
    t.flat_ = std::move(flat);
    t.n_ = t.flat_.size() / static_cast<std::size_t>(d);
    return t;
  }

  static TargetSet points(const std::vector<Vec>& xs) {
    if (xs.empty()) throw DomainError("empty target list");
    const auto d = static_cast<int>(xs.front().size());
    std::vector<double> flat;
    for (const Vec& x : xs) {
      if (x.size() != d) throw DomainError("targets of mixed dimension");
      for (int k = 0; k < d; ++k) flat.push_back(x(k));
    }
    return points(d, std::move(flat));
  }

  /// Every point of a product grid, last axis fastest.
  static TargetSet product(TensorGrid g, std::optional<Mat> map = std::nullopt) {
    if (g.axes.empty()) throw DomainError("empty product grid");
    for (const auto& ax : g.axes)
      for (double v : ax)
        if (!std::isfinite(v)) throw DomainError("target coordinates must be finite");
    TargetSet t;
    t.d_ = static_cast<int>(g.axes.size());
    t.n_ = g.size();
    if (map && (map->rows() != t.d_ || map->cols() != t.d_ || !map->allFinite()))
      throw DomainError("target map must be a finite square matrix of the grid dimension");
    t.map_ = std::move(map);
    t.grid_ = std::move(g);
    return t;
  }

  static TargetSet atoms(const DiscreteMeasure& mu, std::optional<Mat> map = std::nullopt) {
    TargetSet t;
    t.d_ = mu.dimension();
    t.n_ = mu.size();
    if (map && (map->rows() != t.d_ || map->cols() != t.d_ || !map->allFinite()))
      throw DomainError("target map must be a finite square matrix of the measure dimension");
    t.map_ = std::move(map);
    if (mu.is_grid())
      t.grid_ = mu.grid();
    else
      t.flat_ = mu.coordinates();
    return t;
  }

  int dimension() const noexcept { return d_; }
  std::size_t size() const noexcept { return n_; }
  bool tensor() const noexcept { return grid_.has_value(); }
  const TensorGrid& grid() const { return *grid_; }
  const std::optional<Mat>& map() const noexcept { return map_; }

  /// Unmapped coordinates y of target i.
  Vec raw(std::size_t i) const {
    Vec y(d_);
    if (grid_) {
      for (int k = d_ - 1; k >= 0; --k) {
        const auto& ax = grid_->axes[static_cast<std::size_t>(k)];
        y(k) = ax[i % ax.size()];
        i /= ax.size();
      }
    } else {
      for (int k = 0; k < d_; ++k) y(k) = flat_[i * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)];
    }
    return y;
  }

  Vec point(std::size_t i) const { return map_ ? Vec(*map_ * raw(i)) : raw(i); }

  /// max |x| over the targets (over the grid box corners for product sets).
  double max_norm() const {
    double r = 0.0;
    if (grid_) {
      for (std::size_t m = 0; m < (std::size_t{1} << d_); ++m) {
        Vec y(d_);
        for (int k = 0; k < d_; ++k) {
          const auto& ax = grid_->axes[static_cast<std::size_t>(k)];
          y(k) = (m >> k) & 1U ? ax.back() : ax.front();
        }
        r = std::max(r, (map_ ? Vec(*map_ * y) : y).norm());
      }
      return r;
    }
    for (std::size_t i = 0; i < n_; ++i) r = std::max(r, point(i).norm());
    return r;
  }

 private:
  int d_ = 0;
  std::size_t n_ = 0;
  std::vector<double> flat_;
  std::optional<TensorGrid> grid_;
  std::optional<Mat> map_;
};

struct EvalResult {
  std::vector<Complex> values;
  std::size_t nodes = 0;
  std::size_t panels = 0;
  double frequency = 0.0;
  double declared_error = 0.0;
  double self_check_error = 0.0;
  std::size_t self_checked = 0;
  bool tensor_path = false;
};

namespace detail {

struct Kahan {
  double re = 0.0, im = 0.0, cr = 0.0, ci = 0.0;
  void add(double a, double b) {
    const double ya = a - cr, ta = re + ya;
    cr = (ta - re) - ya;
    re = ta;
    const double yb = b - ci, tb = im + yb;
    ci = (tb - im) - yb;
    im = tb;
  }
};

// Per node: quadrature coefficient and lambda (L^T gamma(t))_j.
struct NodeTable {
  int d = 0;
  std::vector<double> coef;
  std::vector<double> phase;
  std::size_t size() const noexcept { return coef.size(); }
};

inline NodeTable node_table(const CurveSpec& c, const TestFunction& f, double lambda, const QuadratureRule& r,
                            std::optional<double> alpha, const std::optional<Mat>& map) {
  NodeTable nt;
  nt.d = c.dimension();
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = r.nodes[k];
    double w = r.weights[k] * f(t);
    if (alpha) w *= affine_weight(c, *alpha, t);
    Vec g = c(t);
    if (map) g = map->transpose() * g;
    nt.coef.push_back(w);
    for (int j = 0; j < nt.d; ++j) nt.phase.push_back(lambda * g(j));
  }
  return nt;
}

inline Complex eval_point(const NodeTable& nt, const Vec& x) {
  Kahan acc;
  const auto d = static_cast<std::size_t>(nt.d);
  for (std::size_t k = 0; k < nt.size(); ++k) {
    double th = 0.0;
    for (std::size_t j = 0; j < d; ++j) th += x(static_cast<Eigen::Index>(j)) * nt.phase[k * d + j];
    acc.add(nt.coef[k] * std::cos(th), nt.coef[k] * std::sin(th));
  }
  return {acc.re, acc.im};
}

// Targets [begin, end) of a product grid, rows of all axes but the last.
inline void eval_tensor_rows(const NodeTable& nt, const TensorGrid& g, std::size_t row_begin, std::size_t row_end,
                             Complex* out) {
  constexpr std::size_t kBlock = 512;
  const auto d = static_cast<std::size_t>(nt.d);
  const auto& last = g.axes[d - 1];
  const std::size_t nl = last.size(), rows = row_end - row_begin;
  std::vector<Kahan> acc(rows * nl);
  std::vector<double> ec(nl * kBlock), es(nl * kBlock), rc(kBlock), rs(kBlock);
  std::vector<std::size_t> idx(d);
  for (std::size_t k0 = 0; k0 < nt.size(); k0 += kBlock) {
    const std::size_t bl = std::min(kBlock, nt.size() - k0);
    for (std::size_t l = 0; l < nl; ++l)
      for (std::size_t b = 0; b < bl; ++b) {
        const double th = last[l] * nt.phase[(k0 + b) * d + d - 1];
        ec[l * kBlock + b] = std::cos(th);
        es[l * kBlock + b] = std::sin(th);
      }
    for (std::size_t r = row_begin; r < row_end; ++r) {
      std::size_t q = r;
      for (std::size_t j = d - 1; j-- > 0;) {
        idx[j] = q % g.axes[j].size();
        q /= g.axes[j].size();
      }
      for (std::size_t b = 0; b < bl; ++b) {
        double th = 0.0;
        for (std::size_t j = 0; j + 1 < d; ++j) th += g.axes[j][idx[j]] * nt.phase[(k0 + b) * d + j];
        const double w = nt.coef[k0 + b];
        rc[b] = w * std::cos(th);
        rs[b] = w * std::sin(th);
      }
      Kahan* row = acc.data() + (r - row_begin) * nl;
      for (std::size_t l = 0; l < nl; ++l) {
        Kahan a = row[l];
        const double* c = ec.data() + l * kBlock;
        const double* s = es.data() + l * kBlock;
        for (std::size_t b = 0; b < bl; ++b) a.add(rc[b] * c[b] - rs[b] * s[b], rc[b] * s[b] + rs[b] * c[b]);
        row[l] = a;
      }
    }
  }
  for (std::size_t i = 0; i < rows * nl; ++i) out[row_begin * nl + i] = {acc[i].re, acc[i].im};
}

template <class Fn>
void parallel_ranges(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t b = std::min(n, chunk * w), e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Core evaluator; `alpha` selects the affine-arclength weight w^alpha.
inline EvalResult evaluate(const CurveSpec& c, const TestFunction& f, double lambda, const TargetSet& x,
                           std::optional<double> alpha, const EngineOptions& opt = {}) {
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and at least 1");
  if (x.dimension() != c.dimension()) throw DomainError("target dimension differs from curve dimension");
  if (!(opt.nodes_per_wavelength > 0.0) || opt.panel_order < 1 || opt.panel_order > kMaxGaussOrder)
    throw DomainError("invalid quadrature options");
  const double freq = lambda * x.max_norm() * speed_bound(c, f.lo(), f.hi()) + f.bandwidth();
  const QuadratureRule rule = build_rule(c, f, freq, alpha.has_value(), opt);
  EvalResult res;
  res.nodes = rule.size();
  res.panels = rule.panels.size();
  res.frequency = freq;
  res.declared_error = rule.declared_error;
  res.values.assign(x.size(), Complex{});
  if (rule.size() == 0 || x.size() == 0) return res;

  if (x.tensor() && x.dimension() >= 1) {
    res.tensor_path = true;
    const detail::NodeTable nt = detail::node_table(c, f, lambda, rule, alpha, x.map());
    const std::size_t nl = x.grid().axes.back().size(), rows = x.size() / nl;
    detail::parallel_ranges(rows, opt.workers, [&](std::size_t b, std::size_t e) {
      detail::eval_tensor_rows(nt, x.grid(), b, e, res.values.data());
    });
  } else {
    const detail::NodeTable nt = detail::node_table(c, f, lambda, rule, alpha, std::nullopt);
    detail::parallel_ranges(x.size(), opt.workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) res.values[i] = detail::eval_point(nt, x.point(i));
    });
  }

  if (opt.self_check) {
    EngineOptions fine = opt;
    fine.nodes_per_wavelength *= 2.0;
    fine.max_nodes *= 2;
    const QuadratureRule r2 = build_rule(c, f, freq, alpha.has_value(), fine);
    const detail::NodeTable nt2 = detail::node_table(c, f, lambda, r2, alpha, std::nullopt);
    const std::size_t stride = std::max<std::size_t>(1, opt.self_check_stride);
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < x.size(); i += stride) picks.push_back(i);
    std::vector<double> err(picks.size());
    detail::parallel_ranges(picks.size(), opt.workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p)
        err[p] = std::abs(detail::eval_point(nt2, x.point(picks[p])) - res.values[picks[p]]);
    });
    res.self_checked = picks.size();
    res.self_check_error = *std::max_element(err.begin(), err.end());
    if (!(res.self_check_error <= opt.self_check_tol)) {
      std::ostringstream os;
      os << "self-check failed: doubled resolution moves values by " << res.self_check_error << " > "
         << opt.self_check_tol << " (" << res.nodes << " nodes, frequency " << freq << ")";
      throw RefinementError(os.str());
    }
  }
  return res;
}

inline EvalResult extension_eval(const CurveSpec& c, const TestFunction& f, double lambda, const TargetSet& x,
                                 const EngineOptions& opt = {}) {
  return evaluate(c, f, lambda, x, std::nullopt, opt);
}

inline EvalResult weighted_extension_eval(const CurveSpec& c, const TestFunction& f, double lambda,
                                          const TargetSet& x, double alpha, const EngineOptions& opt = {}) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  return evaluate(c, f, lambda, x, alpha, opt);
}

/// (sum_k mu_k |v_k|^q)^(1/q), or max |v_k| for q = inf.
inline double lq_norm(const std::vector<Complex>& values, const DiscreteMeasure& mu, double q) {
  if (values.size() != mu.size())
    throw DomainError("value count " + std::to_string(values.size()) + " differs from atom count " +
                      std::to_string(mu.size()));
  if (!(q >= 1.0)) throw DomainError("q must be at least 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (const Complex& v : values) m = std::max(m, std::abs(v));
    return m;
  }
  long double s = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = std::abs(values[i]);
    if (a > 0.0) s += static_cast<long double>(mu.weight(i)) * std::pow(static_cast<long double>(a), q);
  }
  return static_cast<double>(std::pow(s, 1.0L / q));
}

}  // namespace curvelab
