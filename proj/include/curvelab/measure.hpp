// SPDX-License-Identifier: Apache-2.0
//
// Weighted point clouds standing in for alpha-regular measures, their
// constructors, the ball-condition audit, anisotropic pushforward and the
// mollified-measure bound.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/fit.hpp"
#include "curvelab/random.hpp"

namespace curvelab {

inline constexpr std::size_t kMaxAtoms = 10'000'000;
inline constexpr double kAuditSlack = 1.1;
inline constexpr double kAuditFloorFactor = 4.0;

struct MeasureOrigin {
  std::string generator;
  std::vector<std::pair<std::string, std::string>> params;
  std::uint64_t seed = 0;
};

/// Product grid: atom (i_1, ..., i_d) sits at (axes[0][i_1], ...) with
/// weight prod_k weights[k][i_k]. Axes are ascending.
struct TensorGrid {
  std::vector<std::vector<double>> axes;
  std::vector<std::vector<double>> weights;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
  }
};

/// Volume of the unit ball in R^n (omega_0 = 1).
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  static DiscreteMeasure from_points(int d, std::vector<double> coords, std::vector<double> weights, double alpha,
                                     double constant, double spacing, MeasureOrigin origin = {}) {
    if (d < 1) throw DomainError("measure dimension must be positive");
    if (coords.size() != weights.size() * static_cast<std::size_t>(d))
      throw DomainError("coordinate count does not match weights");
    DiscreteMeasure m;
    m.d_ = d;
    m.coords_ = std::move(coords);
    m.weights_ = std::move(weights);
    m.set_claim(alpha, constant);
    m.spacing_ = spacing;
    m.origin_ = std::move(origin);
    m.finish();
    return m;
  }

  static DiscreteMeasure from_grid(TensorGrid g, double alpha, double constant, double spacing,
                                   MeasureOrigin origin = {}) {
    if (g.axes.empty() || g.axes.size() != g.weights.size()) throw DomainError("malformed tensor grid");
    for (std::size_t k = 0; k < g.axes.size(); ++k) {
      if (g.axes[k].empty() || g.axes[k].size() != g.weights[k].size()) throw DomainError("malformed grid axis");
      if (!std::is_sorted(g.axes[k].begin(), g.axes[k].end())) throw DomainError("grid axis must be ascending");
    }
    if (g.size() > kMaxAtoms) throw DomainError("atom count " + std::to_string(g.size()) + " exceeds 10^7");
    DiscreteMeasure m;
    m.d_ = static_cast<int>(g.axes.size());
    m.grid_ = std::move(g);
    m.set_claim(alpha, constant);
    m.spacing_ = spacing;
    m.origin_ = std::move(origin);
    m.finish();
    return m;
  }

  int dimension() const noexcept { return d_; }
  std::size_t size() const noexcept { return grid_ ? grid_->size() : weights_.size(); }
  bool is_grid() const noexcept { return grid_.has_value(); }
  const TensorGrid& grid() const { return *grid_; }
  const std::vector<double>& axis_prefix(int k) const { return prefix_[static_cast<std::size_t>(k)]; }

  double alpha() const noexcept { return alpha_; }
  double constant() const noexcept { return c_; }
  double spacing() const noexcept { return spacing_; }
  const MeasureOrigin& origin() const noexcept { return origin_; }
  double total_mass() const noexcept { return mass_; }
  const std::vector<double>& lower() const noexcept { return lo_; }
  const std::vector<double>& upper() const noexcept { return hi_; }
  double diameter() const {
    double s = 0.0;
    for (int k = 0; k < d_; ++k) s += (hi_[k] - lo_[k]) * (hi_[k] - lo_[k]);
    return std::sqrt(s);
  }

  void atom(std::size_t i, double* x) const {
    if (!grid_) {
      for (int k = 0; k < d_; ++k) x[k] = coords_[i * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)];
      return;
    }
    for (int k = d_ - 1; k >= 0; --k) {
      const auto& ax = grid_->axes[static_cast<std::size_t>(k)];
      x[k] = ax[i % ax.size()];
      i /= ax.size();
    }
  }
  std::vector<double> atom(std::size_t i) const {
    std::vector<double> x(static_cast<std::size_t>(d_));
    atom(i, x.data());
    return x;
  }
  double weight(std::size_t i) const {
    if (!grid_) return weights_[i];
    double w = 1.0;
    for (int k = d_ - 1; k >= 0; --k) {
      const auto& wk = grid_->weights[static_cast<std::size_t>(k)];
      w *= wk[i % wk.size()];
      i /= wk.size();
    }
    return w;
  }

  /// Flat row-major coordinates of every atom.
  std::vector<double> coordinates() const {
    if (!grid_) return coords_;
    std::vector<double> out(size() * static_cast<std::size_t>(d_));
    for (std::size_t i = 0; i < size(); ++i) atom(i, out.data() + i * static_cast<std::size_t>(d_));
    return out;
  }
  std::vector<double> weights() const {
    if (!grid_) return weights_;
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = weight(i);
    return out;
  }

  /// Same atoms with a different (alpha, C) claim.
  DiscreteMeasure with_claim(double alpha, double constant) const {
    DiscreteMeasure m = *this;
    m.set_claim(alpha, constant);
    return m;
  }

  /// Atoms inside the closed ball of radius r about the origin.
  DiscreteMeasure restricted_to_ball(double r) const {
    std::vector<double> c, w;
    std::vector<double> x(static_cast<std::size_t>(d_));
    bool all = true;
    for (std::size_t i = 0; i < size(); ++i) {
      atom(i, x.data());
      double s = 0.0;
      for (double v : x) s += v * v;
      if (s <= r * r) {
        c.insert(c.end(), x.begin(), x.end());
        w.push_back(weight(i));
      } else {
        all = false;
      }
    }
    if (all) return *this;
    return from_points(d_, std::move(c), std::move(w), alpha_, c_, spacing_, origin_);
  }

 private:
  void set_claim(double alpha, double constant) {
    if (!(alpha > 0.0) || alpha > d_) throw DomainError("claimed alpha must lie in (0, d]");
    if (!(constant > 0.0)) throw DomainError("claimed constant must be positive");
    alpha_ = alpha;
    c_ = constant;
  }

  void finish() {
    lo_.assign(static_cast<std::size_t>(d_), std::numeric_limits<double>::infinity());
    hi_.assign(static_cast<std::size_t>(d_), -std::numeric_limits<double>::infinity());
    if (grid_) {
      mass_ = 1.0;
      prefix_.clear();
      for (int k = 0; k < d_; ++k) {
        const auto& ax = grid_->axes[static_cast<std::size_t>(k)];
        const auto& w = grid_->weights[static_cast<std::size_t>(k)];
        lo_[static_cast<std::size_t>(k)] = ax.front();
        hi_[static_cast<std::size_t>(k)] = ax.back();
        std::vector<double> p(w.size() + 1, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw DomainError("weights must be finite and nonnegative");
          p[i + 1] = p[i] + w[i];
        }
        mass_ *= p.back();
        prefix_.push_back(std::move(p));
      }
      return;
    }
    if (weights_.size() > kMaxAtoms) throw DomainError("atom count exceeds 10^7");
    mass_ = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
        throw DomainError("weights must be finite and nonnegative");
      mass_ += weights_[i];
      for (int k = 0; k < d_; ++k) {
        const double v = coords_[i * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)];
        if (!std::isfinite(v)) throw DomainError("atom coordinates must be finite");
        lo_[static_cast<std::size_t>(k)] = std::min(lo_[static_cast<std::size_t>(k)], v);
        hi_[static_cast<std::size_t>(k)] = std::max(hi_[static_cast<std::size_t>(k)], v);
      }
    }
    if (weights_.empty()) lo_.assign(static_cast<std::size_t>(d_), 0.0), hi_.assign(static_cast<std::size_t>(d_), 0.0);
  }

  int d_ = 0;
  std::vector<double> coords_, weights_;
  std::optional<TensorGrid> grid_;
  std::vector<std::vector<double>> prefix_;
  double alpha_ = 1.0, c_ = 1.0, spacing_ = 0.0, mass_ = 0.0;
  std::vector<double> lo_, hi_;
  MeasureOrigin origin_;
};

namespace detail {

inline std::vector<double> cell_centers(double lo, double hi, int n) {
  std::vector<double> c(static_cast<std::size_t>(n));
  const double w = (hi - lo) / n;
  for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = lo + (i + 0.5) * w;
  return c;
}

// Antiderivative of |x|^e for e > -1.
inline double signed_power_primitive(double x, double e) {
  const double v = std::pow(std::abs(x), e + 1.0) / (e + 1.0);
  return x < 0 ? -v : v;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Cell-centered grid on the box with cell-volume weights; alpha = d,
/// C = |unit ball| * 1.1.
inline DiscreteMeasure make_lebesgue(int d, const std::vector<std::pair<double, double>>& box,
                                     const std::vector<int>& resolution) {
  if (static_cast<int>(box.size()) != d || static_cast<int>(resolution.size()) != d)
    throw DomainError("box and resolution must have d entries");
  TensorGrid g;
  double spacing = 0.0;
  double total = 1.0;
  for (int k = 0; k < d; ++k) {
    const auto [lo, hi] = box[static_cast<std::size_t>(k)];
    const int n = resolution[static_cast<std::size_t>(k)];
    if (!(hi > lo)) throw DomainError("box must have positive extent");
    if (n < 2) throw DomainError("resolution must be at least 2 per axis");
    total *= n;
    if (total > static_cast<double>(kMaxAtoms)) throw DomainError("Lebesgue grid exceeds 10^7 atoms");
    const double w = (hi - lo) / n;
    spacing = std::max(spacing, w);
    g.axes.push_back(detail::cell_centers(lo, hi, n));
    g.weights.emplace_back(static_cast<std::size_t>(n), w);
  }
  MeasureOrigin o{"lebesgue", {{"d", std::to_string(d)}}, 0};
  for (int k = 0; k < d; ++k) {
    o.params.emplace_back("box" + std::to_string(k), detail::fmt(box[static_cast<std::size_t>(k)].first) + ":" +
                                                         detail::fmt(box[static_cast<std::size_t>(k)].second));
    o.params.emplace_back("n" + std::to_string(k), std::to_string(resolution[static_cast<std::size_t>(k)]));
  }
  return DiscreteMeasure::from_grid(std::move(g), d, unit_ball_volume(d) * kAuditSlack, spacing, std::move(o));
}

inline DiscreteMeasure make_lebesgue(int d, double lo, double hi, int resolution) {
  return make_lebesgue(d, std::vector<std::pair<double, double>>(static_cast<std::size_t>(d), {lo, hi}),
                       std::vector<int>(static_cast<std::size_t>(d), resolution));
}

/// Constant C of the singular product measure: the ball sits inside a
/// cylinder over an interval centered where |x_{j+1}|^e peaks.
inline double appendix_a_constant(int d, double alpha, int j) {
  const double e = alpha - d + j;
  return 2.0 * unit_ball_volume(d - j - 1) / (e + 1.0) * kAuditSlack;
}

/// delta(x_1) ... delta(x_j) |x_{j+1}|^{alpha-d+j} dx_{j+1} ... dx_d on the
/// centered box prod [-extent_k, extent_k] (k >= j), cell weights integrated
/// exactly. Spacing is the widest cell.
inline DiscreteMeasure make_appendix_a_box(int d, double alpha, int j, const std::vector<double>& extent,
                                           int resolution) {
  if (j < 0 || j >= d) throw DomainError("slice count j must satisfy 0 <= j < d");
  if (!(alpha > d - j - 1) || alpha > d - j)
    throw DomainError("alpha must lie in (d-j-1, d-j] for the given j");
  if (static_cast<int>(extent.size()) != d) throw DomainError("extent must have d entries");
  if (resolution < 2) throw DomainError("resolution must be at least 2");
  for (int k = j; k < d; ++k)
    if (!(extent[static_cast<std::size_t>(k)] > 0.0)) throw DomainError("extent must be positive");
  if (std::pow(static_cast<double>(resolution), d - j) > static_cast<double>(kMaxAtoms))
    throw DomainError("singular measure grid exceeds 10^7 atoms");
  const double e = alpha - d + j;
  TensorGrid g;
  double spacing = 0.0;
  for (int k = 0; k < j; ++k) {
    g.axes.push_back({0.0});
    g.weights.push_back({1.0});
  }
  for (int k = j; k < d; ++k) {
    const double ext = extent[static_cast<std::size_t>(k)];
    const double w = 2.0 * ext / resolution;
    spacing = std::max(spacing, w);
    g.axes.push_back(detail::cell_centers(-ext, ext, resolution));
    std::vector<double> wk(static_cast<std::size_t>(resolution), w);
    if (k == j)
      for (int i = 0; i < resolution; ++i) {
        const double a = -ext + i * w, b = -ext + (i + 1) * w;
        wk[static_cast<std::size_t>(i)] = detail::signed_power_primitive(b, e) - detail::signed_power_primitive(a, e);
      }
    g.weights.push_back(std::move(wk));
  }
  MeasureOrigin o{"appendix-a",
                  {{"d", std::to_string(d)},
                   {"alpha", detail::fmt(alpha)},
                   {"j", std::to_string(j)},
                   {"resolution", std::to_string(resolution)}},
                  0};
  for (int k = j; k < d; ++k) o.params.emplace_back("extent" + std::to_string(k), detail::fmt(extent[static_cast<std::size_t>(k)]));
  return DiscreteMeasure::from_grid(std::move(g), alpha, appendix_a_constant(d, alpha, j), spacing, std::move(o));
}

/// Cube version of make_appendix_a_box.
inline DiscreteMeasure make_appendix_a(int d, double alpha, int j, double extent, int resolution) {
  if (!(extent > 0.0)) throw DomainError("extent must be positive and resolution >= 2");
  return make_appendix_a_box(d, alpha, j, std::vector<double>(static_cast<std::size_t>(std::max(d, 0)), extent),
                             resolution);
}

/// Product of d middle-gap Cantor measures on [0,1] (atoms at the centers of
/// the depth-level intervals), placed in the first d coordinates of
/// R^{embedding}. alpha = d log 2 / log(1/ratio).
inline DiscreteMeasure make_cantor(int d, double ratio, int depth, int embedding = 0) {
  if (embedding <= 0) embedding = d;
  if (d < 1 || embedding < d) throw DomainError("embedding dimension must be >= d >= 1");
  if (!(ratio > 0.0) || !(ratio < 0.5)) throw DomainError("Cantor ratio must lie in (0, 1/2)");
  if (depth < 0 || depth > 20) throw DomainError("Cantor depth must lie in [0, 20]");
  if (std::pow(2.0, static_cast<double>(depth) * d) > static_cast<double>(kMaxAtoms))
    throw DomainError("Cantor atom count exceeds 10^7");
  std::vector<double> left{0.0};
  double len = 1.0;
  for (int n = 0; n < depth; ++n) {
    std::vector<double> next;
    next.reserve(left.size() * 2);
    for (double a : left) {
      next.push_back(a);
      next.push_back(a + len - ratio * len);
    }
    left = std::move(next);
    len *= ratio;
  }
  std::vector<double> centers(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) centers[i] = left[i] + 0.5 * len;
  const double w = std::ldexp(1.0, -depth);
  TensorGrid g;
  for (int k = 0; k < embedding; ++k) {
    if (k < d) {
      g.axes.push_back(centers);
      g.weights.emplace_back(centers.size(), w);
    } else {
      g.axes.push_back({0.0});
      g.weights.push_back({1.0});
    }
  }
  const double alpha1 = std::log(2.0) / std::log(1.0 / ratio);
  const double alpha = d * alpha1;
  double c = 0.0;
  if (depth == 0) {
    // Degenerate single atom: the claim is mass * floor^{-alpha}.
    c = std::pow(kAuditFloorFactor * len, -alpha);
  } else {
    // A window of length <= r^n meets at most hits level-n intervals.
    const double hits = 1.0 + std::ceil(ratio / (1.0 - 2.0 * ratio) - 1e-12);
    c = std::pow(2.0 * hits * std::pow(2.0, alpha1), d);
  }
  MeasureOrigin o{"cantor",
                  {{"d", std::to_string(d)},
                   {"ratio", detail::fmt(ratio)},
                   {"depth", std::to_string(depth)},
                   {"embedding", std::to_string(embedding)}},
                  0};
  return DiscreteMeasure::from_grid(std::move(g), alpha, c, len, std::move(o));
}

// ---------------------------------------------------------------------------
// Ball masses and the regularity audit

/// Dyadic radii 2^{-k} from the discretization floor (4x spacing) to the
/// diameter; a single floor radius when that range is empty.
inline std::vector<double> audit_radii(const DiscreteMeasure& mu) {
  const double floor = kAuditFloorFactor * mu.spacing();
  const double diam = mu.diameter();
  std::vector<double> r;
  if (floor > 0.0) {
    for (int k = static_cast<int>(std::ceil(std::log2(floor) - 1e-12)); std::ldexp(1.0, k) <= diam; ++k)
      r.push_back(std::ldexp(1.0, k));
  }
  if (r.empty()) r.push_back(floor > 0.0 ? floor : 1.0);
  return r;
}

namespace detail {

inline double grid_ball(const DiscreteMeasure& mu, const double* c, int axis, double r2) {
  const TensorGrid& g = mu.grid();
  const auto& ax = g.axes[static_cast<std::size_t>(axis)];
  const double r = std::sqrt(r2);
  const auto lo = static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), c[axis] - r) - ax.begin());
  const auto hi = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), c[axis] + r) - ax.begin());
  if (lo >= hi) return 0.0;
  if (axis == mu.dimension() - 1) {
    const auto& p = mu.axis_prefix(axis);
    return p[hi] - p[lo];
  }
  const auto& w = g.weights[static_cast<std::size_t>(axis)];
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dx = ax[i] - c[axis];
    const double rem = r2 - dx * dx;
    if (rem < 0.0 || w[i] == 0.0) continue;
    s += w[i] * grid_ball(mu, c, axis + 1, rem);
  }
  return s;
}

}  // namespace detail

/// mu(closed ball(x, r)) for every radius (ascending) in `radii`.
inline std::vector<double> ball_masses(const DiscreteMeasure& mu, const double* x, const std::vector<double>& radii) {
  std::vector<double> out(radii.size(), 0.0);
  if (mu.is_grid()) {
    for (std::size_t k = 0; k < radii.size(); ++k) out[k] = detail::grid_ball(mu, x, 0, radii[k] * radii[k]);
    return out;
  }
  std::vector<double> r2(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) r2[k] = radii[k] * radii[k];
  std::vector<double> bucket(radii.size() + 1, 0.0);
  std::vector<double> y(static_cast<std::size_t>(mu.dimension()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu.atom(i, y.data());
    double s = 0.0;
    for (int k = 0; k < mu.dimension(); ++k) s += (y[static_cast<std::size_t>(k)] - x[k]) * (y[static_cast<std::size_t>(k)] - x[k]);
    const auto b = static_cast<std::size_t>(std::lower_bound(r2.begin(), r2.end(), s) - r2.begin());
    bucket[b] += mu.weight(i);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) out[k] = (acc += bucket[k]);
  return out;
}

/// Atom indices used as ball centers: `n_random` seeded draws plus the
/// `n_heavy` heaviest atoms (ties broken toward the bounding-box center).
inline std::vector<std::size_t> sample_centers(const DiscreteMeasure& mu, std::size_t n_random, std::size_t n_heavy,
                                               std::uint64_t seed) {
  std::vector<std::size_t> out;
  const std::size_t n = mu.size();
  if (n == 0) return out;
  if (n <= n_random + n_heavy) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < n_random; ++k) out.push_back(rng.index(n));
  const int d = mu.dimension();
  std::vector<double> mid(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) mid[static_cast<std::size_t>(k)] = 0.5 * (mu.lower()[static_cast<std::size_t>(k)] + mu.upper()[static_cast<std::size_t>(k)]);
  auto key_less = [&](std::size_t a, std::size_t b) {
    const double wa = mu.weight(a), wb = mu.weight(b);
    if (wa != wb) return wa > wb;
    const auto xa = mu.atom(a), xb = mu.atom(b);
    double da = 0.0, db = 0.0;
    for (int k = 0; k < d; ++k) {
      da += (xa[static_cast<std::size_t>(k)] - mid[static_cast<std::size_t>(k)]) * (xa[static_cast<std::size_t>(k)] - mid[static_cast<std::size_t>(k)]);
      db += (xb[static_cast<std::size_t>(k)] - mid[static_cast<std::size_t>(k)]) * (xb[static_cast<std::size_t>(k)] - mid[static_cast<std::size_t>(k)]);
    }
    if (da != db) return da < db;
    return a < b;
  };
  std::vector<std::size_t> cand;
  if (mu.is_grid()) {
    // Heaviest atoms of a product grid combine the heaviest entries per axis.
    const TensorGrid& g = mu.grid();
    std::vector<std::vector<std::size_t>> best(static_cast<std::size_t>(d));
    const auto per_axis = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n_heavy), 1.0 / d))) + 1;
    for (int k = 0; k < d; ++k) {
      const auto& ax = g.axes[static_cast<std::size_t>(k)];
      const auto& w = g.weights[static_cast<std::size_t>(k)];
      std::vector<std::size_t> idx(ax.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      const double m = mid[static_cast<std::size_t>(k)];
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (w[a] != w[b]) return w[a] > w[b];
        return std::abs(ax[a] - m) < std::abs(ax[b] - m);
      });
      idx.resize(std::min(idx.size(), per_axis));
      best[static_cast<std::size_t>(k)] = std::move(idx);
    }
    std::vector<std::size_t> pos(static_cast<std::size_t>(d), 0);
    while (true) {
      std::size_t flat = 0;
      for (int k = 0; k < d; ++k) flat = flat * g.axes[static_cast<std::size_t>(k)].size() + best[static_cast<std::size_t>(k)][pos[static_cast<std::size_t>(k)]];
      cand.push_back(flat);
      int k = d - 1;
      while (k >= 0 && ++pos[static_cast<std::size_t>(k)] == best[static_cast<std::size_t>(k)].size()) pos[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
  } else {
    cand.resize(n);
    for (std::size_t i = 0; i < n; ++i) cand[i] = i;
  }
  const std::size_t take = std::min(n_heavy, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), key_less);
  out.insert(out.end(), cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

struct AuditReport {
  double c_est = 0.0;
  double exponent_fit = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  bool exponent_consistent = true;
  double floor = 0.0;
  std::size_t centers = 0;
  std::vector<double> radii;
  std::vector<double> sup_mass;  // max over centers of mu(B(x, r))
};

inline constexpr std::size_t kAuditCenters = 512;
inline constexpr std::size_t kHeavyCenters = 32;
inline constexpr std::size_t kMollifierCenters = 128;

/// Ball-condition audit: max mu(B(x,r)) / r^alpha over sampled atom centers
/// and dyadic radii above the floor. Passes iff C_est <= 1.1 C_mu. The
/// exponent fit regresses log sup_x mu(B(x,r)) on log r for r <= diam/4 and
/// is flagged inconsistent when it misses alpha by more than 0.1.
inline AuditReport regularity_audit(const DiscreteMeasure& mu, std::uint64_t seed = 0,
                                    std::size_t n_centers = kAuditCenters) {
  if (mu.size() == 0) throw DomainError("audit needs at least one atom");
  AuditReport rep;
  rep.radii = audit_radii(mu);
  rep.floor = kAuditFloorFactor * mu.spacing();
  rep.sup_mass.assign(rep.radii.size(), 0.0);
  const auto centers = sample_centers(mu, n_centers, kHeavyCenters, seed);
  rep.centers = centers.size();
  std::vector<double> x(static_cast<std::size_t>(mu.dimension()));
  for (std::size_t c : centers) {
    mu.atom(c, x.data());
    const auto m = ball_masses(mu, x.data(), rep.radii);
    for (std::size_t k = 0; k < m.size(); ++k) rep.sup_mass[k] = std::max(rep.sup_mass[k], m[k]);
  }
  for (std::size_t k = 0; k < rep.radii.size(); ++k)
    rep.c_est = std::max(rep.c_est, rep.sup_mass[k] / std::pow(rep.radii[k], mu.alpha()));
  rep.pass = rep.c_est <= mu.constant() * kAuditSlack;
  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < rep.radii.size(); ++k)
    if (rep.radii[k] <= 0.25 * mu.diameter() && rep.sup_mass[k] > 0.0) {
      fx.push_back(rep.radii[k]);
      fy.push_back(rep.sup_mass[k]);
    }
  if (fx.size() >= 2) {
    rep.exponent_fit = log2_slope(fx, fy);
    rep.exponent_consistent = std::abs(rep.exponent_fit - mu.alpha()) <= 0.1;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pushforward under x -> D_h^a A x

struct PushforwardSpec {
  ExponentTuple a;
  double h = 1.0;
  Mat A;

  PushforwardSpec(ExponentTuple tuple, double scale, Mat matrix)
      : a(std::move(tuple)), h(scale), A(std::move(matrix)) {
    if (A.rows() != a.size() || A.cols() != a.size()) throw DomainError("matrix size differs from tuple length");
    if (!(std::abs(h) > 0.0) || std::abs(h) > 1.0) throw DomainError("pushforward scale must satisfy 0 < |h| <= 1");
    if (std::abs(small_determinant(A)) <= 1e-14 * std::pow(A.norm(), a.size()))
      throw DomainError("pushforward matrix is singular");
  }
  PushforwardSpec(ExponentTuple tuple, double scale)
      : PushforwardSpec(tuple, scale, Mat::Identity(tuple.size(), tuple.size())) {}

  Mat map() const { return dilation(h, a) * A; }
};

/// (d^2+d)/2 - beta(alpha) - sum a_i.
inline double rescale_exponent(int d, double alpha, const ExponentTuple& a) {
  return 0.5 * (d * d + d) - beta_alpha(alpha, d) - a.sum();
}

/// Covering factor: cover D_h^{-1} B(x, r) by cubes of side r |h|^{-(j+1)}
/// and each cube by a ball; expressed relative to |h|^{E}. Bounded by
/// 3^d (sqrt(d)/2)^alpha for |h| <= 1.
inline double covering_constant(int d, double alpha, const ExponentTuple& a, double h) {
  const int j = d - static_cast<int>(std::ceil(alpha));
  const double ah = std::abs(h);
  double c = std::pow(std::sqrt(static_cast<double>(d)) / 2.0, alpha);
  for (int i = 0; i < d; ++i) c *= std::ceil(2.0 * std::pow(ah, (j + 1) - a[i]) - 1e-12);
  return c * std::pow(ah, -(j + 1) * alpha - rescale_exponent(d, alpha, a));
}

/// Certified constant C ||A^{-1}||^alpha |h|^E C_cover(h).
inline double pushforward_constant(int d, double alpha, double constant, const PushforwardSpec& s) {
  const double ainv = s.A.inverse().operatorNorm();
  return constant * std::pow(ainv, alpha) * std::pow(std::abs(s.h), rescale_exponent(d, alpha, s.a)) *
         covering_constant(d, alpha, s.a, s.h);
}

inline double pushforward_constant(const DiscreteMeasure& mu, const PushforwardSpec& s) {
  return pushforward_constant(mu.dimension(), mu.alpha(), mu.constant(), s);
}

/// Image of mu under x -> D_h^a A x, so that int F d(image) = int F(D_h^a A x) dmu.
inline DiscreteMeasure pushforward(const DiscreteMeasure& mu, const PushforwardSpec& s) {
  const int d = mu.dimension();
  if (s.a.size() != d) throw DomainError("pushforward tuple length differs from measure dimension");
  const Mat t = s.map();
  const double c = pushforward_constant(mu, s);
  Eigen::JacobiSVD<Mat> svd(t);
  const double spacing = mu.spacing() * svd.singularValues()(0);
  MeasureOrigin o = mu.origin();
  o.params.emplace_back("pushforward_h", detail::fmt(s.h));
  o.params.emplace_back("pushforward_a", s.a.str());
  const bool diagonal = t.isDiagonal(0.0);
  if (mu.is_grid() && diagonal) {
    TensorGrid g = mu.grid();
    for (int k = 0; k < d; ++k) {
      const double f = t(k, k);
      auto& ax = g.axes[static_cast<std::size_t>(k)];
      auto& w = g.weights[static_cast<std::size_t>(k)];
      for (double& v : ax) v *= f;
      if (f < 0) {
        std::reverse(ax.begin(), ax.end());
        std::reverse(w.begin(), w.end());
      }
    }
    return DiscreteMeasure::from_grid(std::move(g), mu.alpha(), c, spacing, std::move(o));
  }
  std::vector<double> coords = mu.coordinates();
  Vec x(d);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int k = 0; k < d; ++k) x[k] = coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
    const Vec y = t * x;
    for (int k = 0; k < d; ++k) coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] = y[k];
  }
  return DiscreteMeasure::from_points(d, std::move(coords), mu.weights(), mu.alpha(), c, spacing, std::move(o));
}

struct RescaleReport {
  double worst_ratio = 0.0;        // max sigma(B)/(C' r^alpha); certified when <= 1
  double observed_constant = 0.0;  // max sigma(B)/r^alpha
  double certified_constant = 0.0;
  double exponent = 0.0;           // (d^2+d)/2 - beta - sum a
  bool tight = false;              // worst ratio in (0.5, 1]
  AuditReport audit;
};

/// Audits the pushforward against the certified constant over `trials`
/// random ball centers (plus the heaviest atoms) and dyadic radii.
inline RescaleReport rescale_bound_check(const DiscreteMeasure& mu, const PushforwardSpec& s, std::size_t trials = kAuditCenters,
                                         std::uint64_t seed = 0) {
  const DiscreteMeasure img = pushforward(mu, s);
  RescaleReport r;
  r.audit = regularity_audit(img, seed, trials);
  r.certified_constant = img.constant();
  r.observed_constant = r.audit.c_est;
  r.worst_ratio = r.observed_constant / r.certified_constant;
  r.exponent = rescale_exponent(mu.dimension(), mu.alpha(), s.a);
  r.tight = r.worst_ratio > 0.5 && r.worst_ratio <= 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Mollified measure

/// phi(x) = (1 + |x|^2)^{-m}, m = d + 2.
struct MollifierProfile {
  int m = 0;
  explicit MollifierProfile(int d) : m(d + 2) {}

  double operator()(double r2) const {
    const double inv = 1.0 / (1.0 + r2);
    double v = 1.0;
    for (int k = 0; k < m; ++k) v *= inv;
    return v;
  }

  /// C with |phi_lambda| * mu <= C C_mu lambda^{d-alpha}:
  /// alpha int_0^inf s^{alpha-1} phi(s) ds = Gamma(1+alpha/2) Gamma(m-alpha/2) / Gamma(m).
  double tail_constant(double alpha) const {
    return std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(m - 0.5 * alpha) / std::tgamma(static_cast<double>(m));
  }
};

struct MollifiedReport {
  double lambda = 0.0;
  double value = 0.0;       // max over sampled centers
  double tail_bound = 0.0;  // neglected contribution outside the summation window
  double bound = 0.0;       // C_profile C_mu lambda^{d-alpha}
  double profile_constant = 0.0;
  std::size_t centers = 0;
};

namespace detail {

inline double grid_mollified(const DiscreteMeasure& mu, const MollifierProfile& phi, const double* x, double lambda,
                             double window, int axis, double r2, double w) {
  const TensorGrid& g = mu.grid();
  const auto& ax = g.axes[static_cast<std::size_t>(axis)];
  const auto& wt = g.weights[static_cast<std::size_t>(axis)];
  const auto lo = static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), x[axis] - window) - ax.begin());
  const auto hi = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), x[axis] + window) - ax.begin());
  double s = 0.0;
  const double l2 = lambda * lambda;
  if (axis == mu.dimension() - 1) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double dx = ax[i] - x[axis];
      s += wt[i] * phi(l2 * (r2 + dx * dx));
    }
    return w * s;
  }
  for (std::size_t i = lo; i < hi; ++i) {
    if (wt[i] == 0.0) continue;
    const double dx = ax[i] - x[axis];
    s += grid_mollified(mu, phi, x, lambda, window, axis + 1, r2 + dx * dx, w * wt[i]);
  }
  return s;
}

}  // namespace detail

/// max over sampled atom centers of sum_y lambda^d phi(lambda (x - y)) mu(y).
/// Grid measures are summed over the cube of half-width K/lambda with K
/// chosen so the neglected tail is below 1e-10 lambda^d |mu|.
inline MollifiedReport mollified_sup(const DiscreteMeasure& mu, double lambda, std::uint64_t seed = 0,
                                     std::size_t n_centers = kMollifierCenters) {
  if (lambda < 1.0) throw DomainError("lambda must be >= 1");
  const int d = mu.dimension();
  const MollifierProfile phi(d);
  MollifiedReport r;
  r.lambda = lambda;
  r.profile_constant = phi.tail_constant(mu.alpha());
  r.bound = r.profile_constant * mu.constant() * std::pow(lambda, d - mu.alpha());
  const double ld = std::pow(lambda, d);
  const double k = std::max(8.0, std::pow(1e10, 1.0 / (2.0 * phi.m)));
  const double window = k / lambda;
  r.tail_bound = mu.is_grid() ? ld * phi(k * k) * mu.total_mass() : 0.0;
  const auto centers = sample_centers(mu, n_centers, kHeavyCenters, seed);
  r.centers = centers.size();
  std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
  for (std::size_t c : centers) {
    mu.atom(c, x.data());
    double v = 0.0;
    if (mu.is_grid()) {
      v = detail::grid_mollified(mu, phi, x.data(), lambda, window, 0, 0.0, 1.0);
    } else {
      for (std::size_t i = 0; i < mu.size(); ++i) {
        mu.atom(i, y.data());
        double s = 0.0;
        for (int q = 0; q < d; ++q) s += (y[static_cast<std::size_t>(q)] - x[static_cast<std::size_t>(q)]) * (y[static_cast<std::size_t>(q)] - x[static_cast<std::size_t>(q)]);
        v += mu.weight(i) * phi(lambda * lambda * s);
      }
    }
    r.value = std::max(r.value, ld * v);
  }
  return r;
}

}  // namespace curvelab
