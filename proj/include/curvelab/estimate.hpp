// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers for the L^p -> L^q(dmu) extension estimates: the
// admissible exponent region, lambda-scaling of a finite test family,
// Knapp-type sharpness, the multilinear L^q(dmu) bound, the rescaling
// inequality through the phase identity, and the dyadic reduction for
// curves of finite type.
//
// Norms over a measure are taken on a window: the atoms x with |P x| <= R
// for a linear normalization P, where R is measured in units of 1/lambda.
// P is the identity for plain scaling runs and the normalizing map
// D_h M^T when a piece of the curve is transported to the model scale.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/engine.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/fit.hpp"
#include "curvelab/function.hpp"
#include "curvelab/measure.hpp"
#include "curvelab/multilinear.hpp"
#include "curvelab/quadrature.hpp"
#include "curvelab/random.hpp"

namespace curvelab {

inline constexpr double kSlopeTolerance = 0.07;
inline constexpr double kWindowRadius = 64.0;    // R, in units of 1 / lambda
inline constexpr double kWindowSpacing = 0.5;    // grid step, in units of 1 / lambda
inline constexpr double kSensitivityTolerance = 0.02;
inline constexpr double kSensitivityFromLambda = 64.0;
inline constexpr double kKnappConstant = 0.1;
inline constexpr double kKnappFloor = 0.5;      // min |T| over the rectangle relative to |T(0)|
inline constexpr double kFlatTolerance = 0.1;
inline constexpr double kDecayThreshold = -0.05;
inline constexpr int kFiniteTypeBlocks = 6;
inline constexpr double kBlockRateTolerance = 0.1;
inline constexpr double kRegionTolerance = 1e-12;
inline const double kSummabilityRatio = std::exp2(-0.4);

/// Class threshold 1 / (2^d d!) on the C^{d+1} distance of a normalized curve.
inline double normalization_threshold(int d) { return 1.0 / (std::ldexp(1.0, d) * factorial(d)); }

// ---------------------------------------------------------------------------
// Exponent pairs and the admissible region

enum class Region { Admissible, NecessaryOnly, Excluded };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::Admissible: return "admissible";
    case Region::NecessaryOnly: return "necessary-only";
    default: return "excluded";
  }
}

/// Classification of (1/p, 1/q). Admissible: d/q <= 1 - 1/p, q >= 2d,
/// beta/q + 1/p < 1 and q > beta + 1. Necessary-only: beta/q + 1/p <= 1
/// without the rest.
inline Region classify(int d, double alpha, double inv_p, double inv_q) {
  const double beta = beta_alpha(alpha, d), tol = kRegionTolerance;
  const double edge = beta * inv_q + inv_p;
  const bool necessary = edge <= 1.0 + tol;
  const bool admissible = d * inv_q <= 1.0 - inv_p + tol && inv_q <= 0.5 / d + tol && edge < 1.0 - tol &&
                          inv_q * (beta + 1.0) < 1.0 - tol;
  if (admissible) return Region::Admissible;
  return necessary ? Region::NecessaryOnly : Region::Excluded;
}

struct ExponentPair {
  double p = 2.0, q = 2.0;
  int d = 2;
  double alpha = 2.0;

  ExponentPair() = default;
  ExponentPair(double p_, double q_, int d_, double alpha_) : p(p_), q(q_), d(d_), alpha(alpha_) {
    if (!(p >= 1.0) || !(q >= 1.0)) throw DomainError("exponents p, q must lie in [1, inf]");
    (void)beta_alpha(alpha, d);  // validates alpha and d
  }

  double inv_p() const { return std::isinf(p) ? 0.0 : 1.0 / p; }
  double inv_q() const { return std::isinf(q) ? 0.0 : 1.0 / q; }
  double beta() const { return beta_alpha(alpha, d); }
  /// beta/q + 1/p; the necessary condition is edge() <= 1.
  double edge() const { return beta() * inv_q() + inv_p(); }
  Region region() const { return classify(d, alpha, inv_p(), inv_q()); }
  bool admissible() const { return region() == Region::Admissible; }
  bool necessary() const { return region() != Region::Excluded; }
  bool on_edge() const { return std::abs(edge() - 1.0) <= kRegionTolerance; }
  /// Target decay exponent -alpha/q.
  double target_slope() const { return -alpha * inv_q(); }
};

struct RegionNode {
  double inv_p = 0.0, inv_q = 0.0;
  Region region = Region::Excluded;
  bool edge = false;  // on beta/q + 1/p = 1
};

struct RegionTable {
  int d = 0;
  double alpha = 0.0, beta = 0.0, step = 0.0;
  std::vector<RegionNode> nodes;

  std::size_t count(Region r) const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [&](const RegionNode& n) { return n.region == r; }));
  }
};

/// Nodes i * step, j * step of [0, 1]^2 in (1/p, 1/q), 1/p outer.
inline RegionTable admissible_region(int d, double alpha, double step) {
  if (!(step > 0.0) || step > 1.0) throw DomainError("grid step must lie in (0, 1]");
  RegionTable t;
  t.d = d;
  t.alpha = alpha;
  t.beta = beta_alpha(alpha, d);
  t.step = step;
  const auto n = static_cast<int>(std::floor(1.0 / step + 1e-9));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      RegionNode node{i * step, j * step, classify(d, alpha, i * step, j * step), false};
      node.edge = std::abs(t.beta * node.inv_q + node.inv_p - 1.0) <= kRegionTolerance;
      t.nodes.push_back(node);
    }
  return t;
}

// ---------------------------------------------------------------------------
// Measure models and windows

/// A measure that can be sampled on any centered box: Lebesgue and the
/// singular product measures exactly, a fixed atom set by restriction.
class MeasureModel {
 public:
  enum class Kind { Lebesgue, AppendixA, Fixed };

  static MeasureModel lebesgue(int d) {
    if (d < 1) throw DomainError("dimension must be positive");
    MeasureModel m;
    m.kind_ = Kind::Lebesgue;
    m.d_ = d;
    m.alpha_ = d;
    m.constant_ = unit_ball_volume(d) * kAuditSlack;
    return m;
  }

  static MeasureModel appendix_a(int d, double alpha, int j) {
    (void)make_appendix_a(d, alpha, j, 1.0, 3);  // validates (d, alpha, j)
    MeasureModel m;
    m.kind_ = Kind::AppendixA;
    m.d_ = d;
    m.alpha_ = alpha;
    m.j_ = j;
    m.constant_ = appendix_a_constant(d, alpha, j);
    return m;
  }

  static MeasureModel fixed(DiscreteMeasure mu) {
    MeasureModel m;
    m.kind_ = Kind::Fixed;
    m.d_ = mu.dimension();
    m.alpha_ = mu.alpha();
    m.constant_ = mu.constant();
    m.mu_ = std::make_shared<const DiscreteMeasure>(std::move(mu));
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return d_; }
  double alpha() const noexcept { return alpha_; }
  double constant() const noexcept { return constant_; }
  int slices() const noexcept { return j_; }
  const DiscreteMeasure& measure() const { return *mu_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Lebesgue) os << "lebesgue(d=" << d_ << ")";
    if (kind_ == Kind::AppendixA) os << "appendix-a(d=" << d_ << ",alpha=" << alpha_ << ",j=" << j_ << ")";
    if (kind_ == Kind::Fixed) os << "atoms(" << mu_->origin().generator << ",n=" << mu_->size() << ")";
    return os.str();
  }

  /// The measure on prod [-half_k, half_k] with `n` cells per axis (n odd
  /// puts an atom at the center).
  DiscreteMeasure box(const std::vector<double>& half, int n) const {
    if (static_cast<int>(half.size()) != d_) throw DomainError("box needs d half-widths");
    if (kind_ == Kind::Lebesgue) {
      std::vector<std::pair<double, double>> b;
      for (double h : half) b.emplace_back(-h, h);
      return make_lebesgue(d_, b, std::vector<int>(static_cast<std::size_t>(d_), n));
    }
    if (kind_ == Kind::AppendixA) return make_appendix_a_box(d_, alpha_, j_, half, n);
    std::vector<double> c, w;
    std::vector<double> x(static_cast<std::size_t>(d_));
    for (std::size_t i = 0; i < mu_->size(); ++i) {
      mu_->atom(i, x.data());
      bool in = true;
      for (int k = 0; k < d_; ++k) in = in && std::abs(x[static_cast<std::size_t>(k)]) <= half[static_cast<std::size_t>(k)];
      if (!in) continue;
      c.insert(c.end(), x.begin(), x.end());
      w.push_back(mu_->weight(i));
    }
    return DiscreteMeasure::from_points(d_, std::move(c), std::move(w), alpha_, constant_, mu_->spacing(),
                                        mu_->origin());
  }

  /// Closed-form mass of the centered box (atom sum for fixed measures).
  double box_mass(const std::vector<double>& half) const {
    if (static_cast<int>(half.size()) != d_) throw DomainError("box needs d half-widths");
    if (kind_ == Kind::Fixed) return box(half, 2).total_mass();
    double m = 1.0;
    if (kind_ == Kind::Lebesgue) {
      for (double h : half) m *= 2.0 * h;
      return m;
    }
    const double e = alpha_ - d_ + j_;
    for (int k = j_; k < d_; ++k) {
      const double h = half[static_cast<std::size_t>(k)];
      m *= k == j_ ? 2.0 * std::pow(h, e + 1.0) / (e + 1.0) : 2.0 * h;
    }
    return m;
  }

 private:
  Kind kind_ = Kind::Lebesgue;
  int d_ = 0, j_ = 0;
  double alpha_ = 0.0, constant_ = 0.0;
  std::shared_ptr<const DiscreteMeasure> mu_;
};

/// Targets and weights of the measure restricted to {x : |L^{-1} x| <= r}.
struct WindowSample {
  TargetSet targets;
  std::vector<double> weights;  // zero outside the window
  Mat map;                      // L: targets are x = L z
  double mass = 0.0;
  /// Normalized coordinates z = L^{-1} x of the targets, as a target set.
  TargetSet normalized;
};

inline int odd_resolution(double radius, double spacing) {
  if (!(radius > 0.0) || !(spacing > 0.0)) throw DomainError("window radius and spacing must be positive");
  const auto n = static_cast<int>(std::ceil(2.0 * radius / spacing));
  return n % 2 == 0 ? n + 1 : n;
}

inline WindowSample window_sample(const MeasureModel& m, const Mat& L, double r, int n) {
  const int d = m.dimension();
  if (L.rows() != d || L.cols() != d) throw DomainError("window map has the wrong size");
  if (n < 3) throw DomainError("window resolution must be at least 3");
  const Mat P = L.inverse();
  if (!P.allFinite()) throw DomainError("window map is singular");
  const bool identity = L.isIdentity(0.0);
  WindowSample s{TargetSet{}, {}, L, 0.0, TargetSet{}};
  const double cell = 2.0 * r / (n - 1);  // atoms on -r .. r
  if (m.kind() == MeasureModel::Kind::Lebesgue) {
    const DiscreteMeasure z = m.box(std::vector<double>(static_cast<std::size_t>(d), r + 0.5 * cell), n);
    const double jac = std::abs(L.determinant());
    s.weights.resize(z.size());
    std::vector<double> y(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < z.size(); ++i) {
      z.atom(i, y.data());
      double q = 0.0;
      for (double v : y) q += v * v;
      s.weights[i] = q <= r * r * (1.0 + 1e-12) ? z.weight(i) * jac : 0.0;
    }
    s.targets = TargetSet::product(z.grid(), identity ? std::nullopt : std::optional<Mat>(L));
    s.normalized = TargetSet::product(z.grid());
  } else if (m.kind() == MeasureModel::Kind::AppendixA) {
    if (!L.isDiagonal(0.0)) throw DomainError("a singular product measure can only be windowed through a diagonal map");
    std::vector<double> half(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) half[static_cast<std::size_t>(k)] = std::abs(L(k, k)) * (r + 0.5 * cell);
    const DiscreteMeasure x = m.box(half, n);
    s.weights.resize(x.size());
    std::vector<double> y(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.atom(i, y.data());
      double q = 0.0;
      for (int k = 0; k < d; ++k) q += std::pow(y[static_cast<std::size_t>(k)] * P(k, k), 2);
      s.weights[i] = q <= r * r * (1.0 + 1e-12) ? x.weight(i) : 0.0;
    }
    s.targets = TargetSet::product(x.grid());
    s.normalized = TargetSet::product(x.grid(), identity ? std::nullopt : std::optional<Mat>(P));
  } else {
    const DiscreteMeasure& mu = m.measure();
    std::vector<double> xs, zs;
    std::vector<double> x(static_cast<std::size_t>(d));
    Vec v(d);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      mu.atom(i, x.data());
      for (int k = 0; k < d; ++k) v(k) = x[static_cast<std::size_t>(k)];
      const Vec z = P * v;
      if (z.norm() > r * (1.0 + 1e-12)) continue;
      xs.insert(xs.end(), x.begin(), x.end());
      for (int k = 0; k < d; ++k) zs.push_back(z(k));
      s.weights.push_back(mu.weight(i));
    }
    s.targets = TargetSet::points(d, std::move(xs));
    s.normalized = TargetSet::points(d, std::move(zs));
  }
  for (double w : s.weights) s.mass += w;
  return s;
}

/// (sum_i w_i |v_i|^q)^{1/q}; max over w_i > 0 for q = inf.
inline double window_norm(const std::vector<Complex>& v, const std::vector<double>& w, double q) {
  if (v.size() != w.size()) throw DomainError("value and weight counts differ");
  if (std::isinf(q)) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (w[i] > 0.0) m = std::max(m, std::abs(v[i]));
    return m;
  }
  long double s = 0.0L;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (w[i] > 0.0 && a > 0.0) s += static_cast<long double>(w[i]) * std::pow(static_cast<long double>(a), q);
  }
  return static_cast<double>(std::pow(s, 1.0L / q));
}

/// (int |f|^p w_gamma^alpha dt)^{1/p} on graded panels; sup |f| for p = inf.
inline double weighted_norm(const CurveSpec& c, const TestFunction& f, double alpha, double p) {
  if (!(p >= 1.0)) throw DomainError("norm exponent must be at least 1");
  if (f.is_zero()) return 0.0;
  if (std::isinf(p)) return f.norm(p);
  EngineOptions o;
  o.nodes_per_wavelength = 20.0;
  const QuadratureRule r = build_rule(c, f, std::max(1.0, p) * f.bandwidth() + 8.0 * std::numbers::pi, true, o);
  long double s = 0.0L;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double v = std::abs(f(r.nodes[k]));
    if (v > 0.0) s += r.weights[k] * std::pow(static_cast<long double>(v), p) * affine_weight(c, alpha, r.nodes[k]);
  }
  return static_cast<double>(std::pow(s, 1.0L / p));
}

inline double operator_norm_of_f(const CurveSpec& c, const TestFunction& f, std::optional<double> alpha, double p) {
  return alpha ? weighted_norm(c, f, *alpha, p) : f.norm(p);
}

// ---------------------------------------------------------------------------
// Test family

struct FamilyMember {
  std::string label;
  TestFunction f;
};

using FamilyFn = std::function<std::vector<FamilyMember>(double lambda)>;

struct FamilyOptions {
  int knapp_positions = 16;
  int knapp_widths = 6;
  int bump_levels = 3;  // bumps on dyadic intervals of length 1, 1/2, ..., 2^{1-levels}
  int trig_count = 32;
  int trig_max_degree = 64;
  std::uint64_t seed = 0;
};

/// Knapp indicators of width lambda^{-1/d} 2^k at evenly spaced positions,
/// smooth bumps on dyadic intervals, and seeded trigonometric polynomials
/// of degree up to trig_max_degree.
inline FamilyFn standard_family(int d, const FamilyOptions& o = {}) {
  if (d < 1) throw DomainError("dimension must be positive");
  return [d, o](double lambda) {
    std::vector<FamilyMember> out;
    for (int k = 0; k < o.knapp_widths; ++k) {
      const double w = std::min(1.0, std::pow(lambda, -1.0 / d) * std::ldexp(1.0, k));
      for (int i = 0; i < o.knapp_positions; ++i) {
        const double a = o.knapp_positions == 1 ? 0.0 : (1.0 - w) * i / (o.knapp_positions - 1);
        std::ostringstream os;
        os.precision(17);
        os << "knapp[" << a << "," << a + w << "]";
        out.push_back({os.str(), TestFunction::indicator(a, std::min(1.0, a + w))});
      }
    }
    for (int l = 0; l < o.bump_levels; ++l) {
      const int m = 1 << l;
      for (int i = 0; i < m; ++i) {
        const TestFunction b = TestFunction::bump(static_cast<double>(i) / m, static_cast<double>(i + 1) / m, 2);
        out.push_back({b.describe(), b});
      }
    }
    for (int i = 0; i < o.trig_count; ++i) {
      const int deg = std::max(1, (i + 1) * o.trig_max_degree / std::max(1, o.trig_count));
      out.push_back({"trig#" + std::to_string(i) + "deg" + std::to_string(deg),
                     TestFunction::random_trig_poly(derive_seed(o.seed, static_cast<std::uint64_t>(i)), deg)});
    }
    return out;
  };
}

/// A fixed list, independent of lambda.
inline FamilyFn fixed_family(std::vector<FamilyMember> members) {
  return [members = std::move(members)](double) { return members; };
}

// ---------------------------------------------------------------------------
// Scaling experiment

struct ScalingOptions {
  double radius = kWindowRadius;
  double spacing = kWindowSpacing;
  std::optional<double> weight_alpha;  // weighted operator T[w, f] with w = w_gamma^alpha
  bool sensitivity = true;             // rerun the maximizer with 2R for lambda >= 64
  bool audit = true;                   // audit fixed atom measures first
  EngineOptions engine{};
};

struct ScalingPoint {
  double lambda = 0.0;
  double value = 0.0;   // family-sup of ||T f||_{L^q(mu, B_R)} / ||f||_p
  double lq = 0.0;      // numerator at the maximizer
  double f_norm = 0.0;  // denominator at the maximizer
  std::string argmax;
  double sensitivity = std::numeric_limits<double>::quiet_NaN();  // relative change at 2R
  std::size_t targets = 0;
  std::size_t members = 0;
};

struct ScalingReport {
  std::string label = "family-sup";
  ExponentPair pair;
  double radius = kWindowRadius;
  std::vector<ScalingPoint> points;
  SlopeFit fit;
  double target = 0.0;
  double tolerance = kSlopeTolerance;
  bool vacuous = false;
  bool pass = false;
  double max_sensitivity = 0.0;
  bool sensitivity_ok = true;

  std::string verdict() const { return vacuous ? "VACUOUS" : (pass ? "PASS" : "FAIL"); }
};

inline void check_lambda_grid(const std::vector<double>& lambdas) {
  if (lambdas.size() < 6) throw DomainError("lambda grid needs at least 6 points");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 1.0)) throw DomainError("lambda values must be at least 1");
    if (i > 0 && std::abs(lambdas[i] / lambdas[i - 1] - 2.0) > 1e-12)
      throw DomainError("lambda grid must be geometric with ratio 2");
  }
}

/// Slope and verdict from the filled points.
inline void finish_scaling(ScalingReport& r) {
  std::vector<double> l, v;
  r.vacuous = true;
  for (const auto& p : r.points) {
    l.push_back(p.lambda);
    v.push_back(p.value);
    if (p.value > 0.0) r.vacuous = false;
  }
  r.fit = fit_log2(l, v);
  r.target = r.pair.target_slope();
  r.max_sensitivity = 0.0;
  for (const auto& p : r.points)
    if (!std::isnan(p.sensitivity)) r.max_sensitivity = std::max(r.max_sensitivity, p.sensitivity);
  r.sensitivity_ok = r.max_sensitivity < kSensitivityTolerance;
  r.pass = r.vacuous || (r.fit.n == r.points.size() && r.fit.slope <= r.target + r.tolerance);
}

inline void audit_or_throw(const MeasureModel& m) {
  if (m.kind() != MeasureModel::Kind::Fixed) return;
  const AuditReport a = regularity_audit(m.measure());
  if (!a.pass)
    throw PreconditionError("measure fails the regularity audit: C_est = " + std::to_string(a.c_est) +
                            " above the claimed constant");
}

inline EvalResult eval_operator(const CurveSpec& c, const TestFunction& f, double lambda, const TargetSet& x,
                                std::optional<double> alpha, const EngineOptions& o) {
  return evaluate(c, f, lambda, x, alpha, o);
}

/// For each lambda: the window of radius R / lambda about the origin, the
/// L^q(mu) norm of T_lambda f over it for every family member, and the
/// largest ratio to ||f||_p. Verdict: fitted slope <= -alpha/q + 0.07.
inline ScalingReport scaling_experiment(const CurveSpec& c, const MeasureModel& mu, const FamilyFn& family, double p,
                                        double q, const std::vector<double>& lambdas, const ScalingOptions& o = {}) {
  if (mu.dimension() != c.dimension()) throw DomainError("measure and curve dimensions differ");
  check_lambda_grid(lambdas);
  if (o.audit) audit_or_throw(mu);
  ScalingReport rep;
  rep.pair = ExponentPair(p, q, c.dimension(), mu.alpha());
  rep.radius = o.radius;
  const int d = c.dimension();
  const Mat I = Mat::Identity(d, d);
  for (double lambda : lambdas) {
    ScalingPoint pt;
    pt.lambda = lambda;
    const double r = o.radius / lambda;
    const WindowSample w = window_sample(mu, I, r, odd_resolution(o.radius, o.spacing));
    pt.targets = w.targets.size();
    const auto members = family(lambda);
    pt.members = members.size();
    const FamilyMember* best = nullptr;
    for (const auto& m : members) {
      const double fn = operator_norm_of_f(c, m.f, o.weight_alpha, p);
      if (!(fn > 0.0)) continue;
      const double lq = window_norm(eval_operator(c, m.f, lambda, w.targets, o.weight_alpha, o.engine).values,
                                    w.weights, q);
      if (best == nullptr || lq / fn > pt.value) {
        pt.value = lq / fn;
        pt.lq = lq;
        pt.f_norm = fn;
        pt.argmax = m.label;
        best = &m;
      }
    }
    if (o.sensitivity && best != nullptr && lambda >= kSensitivityFromLambda && pt.lq > 0.0) {
      const WindowSample w2 = window_sample(mu, I, 2.0 * r, odd_resolution(2.0 * o.radius, o.spacing));
      const double lq2 =
          window_norm(eval_operator(c, best->f, lambda, w2.targets, o.weight_alpha, o.engine).values, w2.weights, q);
      pt.sensitivity = std::abs(lq2 - pt.lq) / lq2;
    }
    rep.points.push_back(pt);
  }
  finish_scaling(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Knapp sharpness

struct KnappConfig {
  double tau = 0.0;
  double h = 1.0;
  std::optional<ExponentTuple> a;  // frame orders at the Knapp point; standard when empty
  double c = kKnappConstant;
  std::vector<double> lambdas;
  int resolution = 33;  // cells per non-degenerate rectangle axis

  /// [tau + h - h lambda^{-1/d}, tau + h].
  std::pair<double, double> interval(double lambda, int d) const {
    return {tau + h - h * std::pow(lambda, -1.0 / d), tau + h};
  }
  /// Half-widths c lambda^{i/d - 1}, i = 1..d.
  std::vector<double> rectangle(double lambda, int d) const {
    std::vector<double> r;
    for (int i = 1; i <= d; ++i) r.push_back(c * std::pow(lambda, static_cast<double>(i) / d - 1.0));
    return r;
  }
};

struct SharpnessPoint {
  double lambda = 0.0;
  double lo = 0.0, hi = 0.0;  // Knapp interval
  double mass = 0.0;          // mu(R) from the sampled measure
  double mass_closed_form = 0.0;
  double lhs = 0.0;           // ||T[w, f]||_{L^q(mu on R)}
  double rhs = 0.0;           // lambda^{-alpha/q} ||f||_{L^p(w)}
  double ratio = 0.0;
  double knapp_min = 0.0;     // min over R of |T[w, f]| / |T[w, f](0)|
  double at_origin = 0.0;     // |T[w, f](0)|
};

struct SharpnessReport {
  ExponentPair pair;
  double beta = 0.0;
  std::vector<SharpnessPoint> points;
  SlopeFit mass_fit, ratio_fit;
  double mass_target = 0.0;   // -alpha + beta / d
  double ratio_target = 0.0;  // (beta/q + 1/p - 1) / d
  std::string trend;          // flat, decaying or growing
  bool mass_ok = false, knapp_ok = false, trend_ok = false, pass = false;

  std::string verdict() const { return pass ? "PASS" : "FAIL"; }
};

/// Knapp example at the point t* = tau + h: f the indicator of the interval
/// of length h lambda^{-1/d} ending at t*, the measure placed on the
/// rectangle |y_i| <= c lambda^{i/d - 1} in the frame y = F^T x with
/// F = (gamma^{(a_i)}(t*)). Reports mu(R), the lower bound of |T[w, f]| on
/// R, and the lambda-trend of lhs / rhs.
inline SharpnessReport sharpness_experiment(const CurveSpec& c, const MeasureModel& mu, const KnappConfig& k, double p,
                                            double q, const EngineOptions& eo = {}) {
  const int d = c.dimension();
  if (mu.dimension() != d) throw DomainError("measure and curve dimensions differ");
  if (mu.kind() == MeasureModel::Kind::AppendixA && mu.slices() != d - static_cast<int>(std::ceil(mu.alpha())))
    throw PreconditionError("slice count j does not match alpha");
  if (!(k.h > 0.0) || k.tau < 0.0 || k.tau + k.h > 1.0 + 1e-12)
    throw DomainError("Knapp interval must lie inside [0, 1]");
  if (!(k.c > 0.0) || k.c > 1.0) throw DomainError("Knapp constant c must lie in (0, 1]");
  if (k.resolution < 3) throw DomainError("rectangle resolution must be at least 3");
  check_lambda_grid(k.lambdas);
  const double alpha = mu.alpha();
  SharpnessReport rep;
  rep.pair = ExponentPair(p, q, d, alpha);
  rep.beta = rep.pair.beta();
  rep.mass_target = -alpha + rep.beta / d;
  rep.ratio_target = (rep.pair.edge() - 1.0) / d;
  const double tstar = std::min(1.0, k.tau + k.h);
  const FrameMatrix F = frame_matrix(c, tstar, k.a.value_or(ExponentTuple::standard(d)));
  if (F.singular()) throw SingularFrameError("singular frame at the Knapp point", std::abs(F.det()));
  const Mat L = F.m.transpose().inverse();
  const int n = k.resolution % 2 == 0 ? k.resolution + 1 : k.resolution;
  double worst = std::numeric_limits<double>::infinity();
  for (double lambda : k.lambdas) {
    SharpnessPoint pt;
    pt.lambda = lambda;
    std::tie(pt.lo, pt.hi) = k.interval(lambda, d);
    pt.lo = std::max(0.0, pt.lo);
    const TestFunction f = TestFunction::indicator(pt.lo, pt.hi);
    const auto half = k.rectangle(lambda, d);
    const DiscreteMeasure box = mu.box(half, n);
    pt.mass = box.total_mass();
    pt.mass_closed_form = mu.box_mass(half);
    const TargetSet x = TargetSet::atoms(box, L);
    const auto vals = weighted_extension_eval(c, f, lambda, x, alpha, eo).values;
    pt.lhs = lq_norm(vals, box, q);
    pt.at_origin = std::abs(weighted_extension_eval(c, f, lambda, TargetSet::points({Vec::Zero(d)}), alpha, eo).values[0]);
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (box.weight(i) > 0.0) mn = std::min(mn, std::abs(vals[i]));
    pt.knapp_min = pt.at_origin > 0.0 ? mn / pt.at_origin : 0.0;
    worst = std::min(worst, pt.knapp_min);
    pt.rhs = std::pow(lambda, -alpha * rep.pair.inv_q()) * weighted_norm(c, f, alpha, p);
    pt.ratio = pt.lhs / pt.rhs;
    rep.points.push_back(pt);
  }
  std::vector<double> l, m, r;
  for (const auto& pt : rep.points) {
    l.push_back(pt.lambda);
    m.push_back(pt.mass);
    r.push_back(pt.ratio);
  }
  rep.mass_fit = fit_log2(l, m);
  rep.ratio_fit = fit_log2(l, r);
  rep.mass_ok = std::abs(rep.mass_fit.slope - rep.mass_target) <= kSlopeTolerance;
  rep.knapp_ok = worst >= kKnappFloor;
  const double s = rep.ratio_fit.slope;
  rep.trend = std::abs(s) <= kFlatTolerance ? "flat" : (s < 0.0 ? "decaying" : "growing");
  if (rep.pair.on_edge())
    rep.trend_ok = std::abs(s) <= kFlatTolerance;
  else if (rep.pair.edge() < 1.0)
    rep.trend_ok = s < kDecayThreshold;
  else
    rep.trend_ok = s > -kDecayThreshold;
  rep.pass = rep.mass_ok && rep.knapp_ok && rep.trend_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Multilinear L^q(dmu)

/// Constants of the kernel psi(u) = (2b/pi) sinc(2bu) sinc^4(bu/4), whose
/// Fourier transform is 1 on [-b, b]: P = ||psi||_1 (b free) and
/// I_alpha = alpha int_0^inf s^{alpha-1} G(s) ds for the radial majorant
/// G(s) = min(1, 1/(2s)) min(1, (4/s)^4) of |psi| / (2b/pi).
struct ReproducingKernel {
  static double l1_norm() {
    static const double value = [] {
      auto sinc = [](double v) { return v == 0.0 ? 1.0 : std::sin(v) / v; };
      const AdaptiveOptions opt{1e-13, 30, 10};
      double s = 0.0;
      const double step = 0.5 * std::numbers::pi;  // zeros of sin(2v)
      for (int i = 0; i < 8000; ++i)
        s += integrate_adaptive([&](double v) { return std::abs(sinc(2.0 * v)) * std::pow(sinc(0.25 * v), 4); },
                                i * step, (i + 1) * step, opt);
      return 2.0 * (2.0 / std::numbers::pi) * s;  // tail beyond 4000 pi is below 1e-14
    }();
    return value;
  }

  static double radial_moment(double alpha) {
    if (!(alpha > 0.0) || alpha >= 5.0) throw DomainError("radial moment needs 0 < alpha < 5");
    const double near = std::pow(0.5, alpha);
    const double mid = std::abs(alpha - 1.0) < 1e-12 ? 0.5 * std::log(8.0)
                                                     : 0.5 * alpha * (std::pow(4.0, alpha - 1.0) - std::pow(0.5, alpha - 1.0)) / (alpha - 1.0);
    const double far = 128.0 * alpha * std::pow(4.0, alpha - 5.0) / (5.0 - alpha);
    return near + mid + far;
  }
};

struct MultilinearLqOptions {
  double radius = kWindowRadius;
  double spacing = kWindowSpacing;
  EngineOptions engine{};
};

struct MultilinearLqPoint {
  double lambda = 0.0;
  double lhs = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

struct MultilinearLqReport {
  double p = 2.0, q = 2.0, alpha = 0.0, L = 0.0;
  double separation = 0.0;
  double kernel_constant = 0.0;  // K in int |F|^2 dmu <= K C_mu lambda^{d-alpha} ||F||_2^2
  double constant = 0.0;         // K^{1/q} C_2^{2/q}
  std::vector<MultilinearLqPoint> points;
  SlopeFit fit;
  double target = 0.0;  // -alpha/q
  bool holds = true;    // lhs <= bound at every lambda
  bool slope_ok = true;
  bool zero = false;

  bool pass() const { return holds && slope_ok; }
  std::string verdict() const { return pass() ? "PASS" : "FAIL"; }
};

/// Half-widths a_j of the j-th coordinate of gamma(t_1) + ... + gamma(t_d)
/// over the supports, from 1025 samples per support.
inline std::vector<double> sum_half_widths(const CurveSpec& c, const std::vector<TestFunction>& fs) {
  const int d = c.dimension();
  std::vector<double> a(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j)
    for (const auto& f : fs) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int s = 0; s <= 1024; ++s) {
        const double v = c(f.lo() + (f.hi() - f.lo()) * s / 1024.0)(j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      a[static_cast<std::size_t>(j)] += 0.5 * (hi - lo);
    }
  return a;
}

/// ||prod T f_i||_{L^q(mu)} on the window B_{R/lambda} against
/// K^{1/q} C_2^{2/q} C_mu^{1/q} L^{-(d^2-d)/(2q)} lambda^{-alpha/q} prod ||f_i||_p,
/// where C_2 is the Lebesgue L^2 constant and K comes from a reproducing
/// kernel for the frequency box of the product (multilinear interpolation
/// between L^2 and the trivial L^inf bound).
inline MultilinearLqReport multilinear_lq_check(const CurveSpec& c, const std::vector<TestFunction>& fs,
                                                const MeasureModel& mu, double p, double q, double L,
                                                const std::vector<double>& lambdas,
                                                const MultilinearLqOptions& o = {}) {
  const int d = c.dimension();
  if (static_cast<int>(fs.size()) != d) throw DomainError("need exactly d functions");
  if (mu.dimension() != d) throw DomainError("measure and curve dimensions differ");
  if (!(p >= 1.0) || !(q >= 2.0)) throw PreconditionError("need p >= 1 and q >= 2");
  const double ip = std::isinf(p) ? 0.0 : 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q;
  if (ip + iq > 1.0 + 1e-12) throw PreconditionError("need 1/p + 1/q <= 1");
  if (!(L > 0.0)) throw DomainError("separation L must be positive");
  if (lambdas.empty()) throw DomainError("empty lambda grid");
  audit_or_throw(mu);
  MultilinearLqReport rep;
  rep.p = p;
  rep.q = q;
  rep.alpha = mu.alpha();
  rep.L = L;
  rep.target = -rep.alpha * iq;
  double sep = std::numeric_limits<double>::infinity();
  bool any_zero = false;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    any_zero = any_zero || fs[i].is_zero();
    for (std::size_t j = i + 1; j < fs.size(); ++j)
      if (!fs[i].is_zero() && !fs[j].is_zero())
        sep = std::min(sep, std::max(fs[j].lo() - fs[i].hi(), fs[i].lo() - fs[j].hi()));
  }
  rep.separation = sep;
  if (!(sep >= L))
    throw PreconditionError("supports are " + std::to_string(sep) + " apart, less than L = " + std::to_string(L));
  double prod_p = 1.0;
  for (const auto& f : fs) prod_p *= f.norm(p);
  rep.zero = any_zero || prod_p == 0.0;

  if (!rep.zero) {
    const auto a = sum_half_widths(c, fs);
    double amin = std::numeric_limits<double>::infinity(), aprod = 1.0;
    for (double v : a) {
      amin = std::min(amin, v);
      aprod *= v;
    }
    if (!(amin > 0.0)) throw PreconditionError("degenerate frequency box");
    rep.kernel_constant = std::pow(ReproducingKernel::l1_norm() * 2.0 / std::numbers::pi, d) * aprod *
                          std::pow(amin, -rep.alpha) * std::pow(static_cast<double>(d), 0.5 * rep.alpha) *
                          ReproducingKernel::radial_moment(rep.alpha);
    rep.constant = std::pow(rep.kernel_constant, iq) * std::pow(multilinear_constant(d), 2.0 * iq);
  }
  const Mat I = Mat::Identity(d, d);
  for (double lambda : lambdas) {
    MultilinearLqPoint pt;
    pt.lambda = lambda;
    if (!rep.zero) {
      const WindowSample w = window_sample(mu, I, o.radius / lambda, odd_resolution(o.radius, o.spacing));
      std::vector<Complex> prod(w.targets.size(), Complex(1.0, 0.0));
      for (const auto& f : fs) {
        const auto v = extension_eval(c, f, lambda, w.targets, o.engine).values;
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= v[i];
      }
      pt.lhs = window_norm(prod, w.weights, q);
      pt.bound = rep.constant * std::pow(mu.constant(), iq) * std::pow(L, -0.5 * (d * d - d) * iq) *
                 std::pow(lambda, -rep.alpha * iq) * prod_p;
      pt.ratio = pt.lhs / pt.bound;
    }
    rep.holds = rep.holds && pt.lhs <= pt.bound * (1.0 + 1e-12);
    rep.points.push_back(pt);
  }
  if (!rep.zero && lambdas.size() >= 2) {
    std::vector<double> l, v;
    for (const auto& pt : rep.points) {
      l.push_back(pt.lambda);
      v.push_back(pt.lhs);
    }
    rep.fit = fit_log2(l, v);
    rep.slope_ok = rep.fit.slope <= rep.target + kSlopeTolerance;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Rescaling inequality

struct RescalingOptions {
  double lambda = 64.0;
  double radius = kWindowRadius;
  double spacing = kWindowSpacing;
  bool check_class = true;           // require the normalized curve inside the class threshold
  std::optional<FamilyFn> family;    // extra members for the lower estimate of Q_lambda(R)
  EngineOptions engine{};
};

struct RescalingReport {
  double tau = 0.0, h = 0.0, lambda = 0.0;
  double lhs = 0.0;             // ||T f||_{L^q(mu)} over the transported window, direct
  double transported = 0.0;     // same norm from (gamma_h, f_h, pushed-forward mu)
  double identity_error = 0.0;  // |lhs - transported| / lhs
  double f_norm = 0.0, fh_norm = 0.0;
  double normalized_constant = 0.0;  // C_h / C_mu of the pushed-forward measure
  double h_power = 0.0;              // 1 - 1/p - beta/q
  double tracked_constant = 0.0;     // (C_h / C_mu)^{1/q} |h|^{beta/q}
  double q_lower = 0.0;              // lower estimate of Q_lambda(R) on normalized data
  double rhs = 0.0;
  double ratio = 0.0;
  double class_distance = 0.0;
  bool holds = true;
};

/// lhs = ||T_lambda f||_{L^q(mu, W)} with W the preimage of B_{R/lambda}
/// under z = D_h M^T x; rhs = C |h|^{1-1/p-beta/q} Q ||f||_p, where
/// C = (C_h / C_mu)^{1/q} |h|^{beta/q} and Q is the largest normalized
/// ratio found on (gamma_h, f_h, mu_h) and the optional family.
inline RescalingReport rescaling_inequality_check(const CurveSpec& c, const MeasureModel& mu, const TestFunction& f,
                                                  double tau, double h, double p, double q,
                                                  const RescalingOptions& o = {}) {
  const int d = c.dimension();
  if (mu.dimension() != d) throw DomainError("measure and curve dimensions differ");
  if (!(h > 0.0) || tau < 0.0 || tau + h > 1.0 + 1e-12) throw DomainError("[tau, tau+h] must lie inside [0, 1]");
  if (!f.is_zero() && (f.lo() < tau - 1e-12 || f.hi() > tau + h + 1e-12))
    throw PreconditionError("f must be supported in [tau, tau+h]");
  const ExponentPair pair(p, q, d, mu.alpha());
  RescalingReport rep;
  rep.tau = tau;
  rep.h = h;
  rep.lambda = o.lambda;
  rep.h_power = 1.0 - pair.inv_p() - pair.beta() * pair.inv_q();
  const ExponentTuple a = ExponentTuple::standard(d);
  const FrameMatrix M = frame_matrix(c, tau, a);
  if (M.singular()) throw SingularFrameError("singular frame at tau = " + std::to_string(tau), std::abs(M.det()));
  const CurveSpec gh = normalize_curve(c, tau, h, a);
  rep.class_distance = class_distance(gh).epsilon;
  if (o.check_class && rep.class_distance > normalization_threshold(d))
    throw PreconditionError("h is above the normalization threshold: class distance " +
                            std::to_string(rep.class_distance));
  const PushforwardSpec ps(a, h, M.m.transpose());
  rep.normalized_constant = pushforward_constant(d, mu.alpha(), mu.constant(), ps) / mu.constant();
  rep.tracked_constant = std::pow(rep.normalized_constant, pair.inv_q()) * std::pow(h, pair.beta() * pair.inv_q());
  if (f.is_zero()) return rep;

  const TestFunction fh = f.affine_pullback(h, tau);
  rep.f_norm = f.norm(p);
  rep.fh_norm = fh.norm(p);
  const Mat L = ps.map().inverse();
  const WindowSample w = window_sample(mu, L, o.radius / o.lambda, odd_resolution(o.radius, o.spacing));
  rep.lhs = window_norm(extension_eval(c, f, o.lambda, w.targets, o.engine).values, w.weights, q);
  rep.transported = window_norm(extension_eval(gh, fh, o.lambda, w.normalized, o.engine).values, w.weights, q);
  rep.identity_error = rep.lhs > 0.0 ? std::abs(rep.lhs - rep.transported) / rep.lhs : 0.0;

  // The pushed-forward measure divided by C_h / C_mu has the constant of mu.
  const double scale = std::pow(rep.normalized_constant, pair.inv_q());
  rep.q_lower = rep.transported / (scale * rep.fh_norm);
  if (o.family)
    for (const auto& m : (*o.family)(o.lambda)) {
      const double fn = m.f.norm(p);
      if (!(fn > 0.0)) continue;
      const double v = window_norm(extension_eval(gh, m.f, o.lambda, w.normalized, o.engine).values, w.weights, q);
      rep.q_lower = std::max(rep.q_lower, v / (scale * fn));
    }
  rep.rhs = rep.tracked_constant * std::pow(h, rep.h_power) * rep.q_lower * rep.f_norm;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  rep.holds = rep.ratio <= 1.0 + 1e-6;
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-type dyadic reduction

struct FiniteTypeOptions {
  int blocks = kFiniteTypeBlocks;
  double radius = kWindowRadius;
  double spacing = kWindowSpacing;
  EngineOptions engine{};
};

struct BlockNorm {
  int j = 0;
  double lo = 0.0, hi = 0.0;
  double norm = 0.0;    // ||T[w, f chi_j]||_{L^q(mu)} over the block's normalized window
  double f_norm = 0.0;  // ||f chi_j||_{L^p(w)}
  double ratio = 0.0;
};

struct FiniteTypeReport {
  ExponentTuple a;
  double tau = 0.0;
  double sigma = 0.0, beta = 0.0;
  double block_lambda = 0.0;
  std::vector<BlockNorm> blocks;
  double rate_target = 0.0;  // sigma (1 - beta/q - 1/p)
  double rate = 0.0;         // fitted decay per block, log2 scale
  double rate_half_width = 0.0;
  double max_step_ratio = 0.0;  // max ratio_{j+1} / ratio_j
  bool decay_ok = false, summable_ok = false, triangle_ok = true;
  ScalingReport aggregate;
  std::vector<double> block_sums;  // per lambda: sum of block norms plus the remainder piece

  bool pass() const { return decay_ok && summable_ok && triangle_ok && aggregate.pass; }
  std::string verdict() const { return pass() ? "PASS" : "FAIL"; }
};

/// Blocks [tau + h_j / 2, tau + h_j], h_j = (1 - tau) 2^{-j}, j < J. Each
/// block norm is taken at the largest lambda over the preimage of
/// B_{R/lambda} under the block's normalizing map D_{h_j} M^T; the decay of
/// norm / ||f chi_j||_{L^p(w)} in j is fitted against sigma(1 - beta/q - 1/p).
/// The aggregate runs the full weighted operator through the scaling
/// harness, and the block norms on the same windows bound it by the
/// triangle inequality.
inline FiniteTypeReport finite_type_pipeline(const CurveSpec& c, double tau, const MeasureModel& mu,
                                             const TestFunction& f, double p, double q,
                                             const std::vector<double>& lambdas, const FiniteTypeOptions& o = {}) {
  const int d = c.dimension();
  if (mu.dimension() != d) throw DomainError("measure and curve dimensions differ");
  if (tau < 0.0 || tau >= 1.0) throw DomainError("tau must lie in [0, 1)");
  if (o.blocks < 2) throw DomainError("need at least two dyadic blocks");
  check_lambda_grid(lambdas);
  const FiniteTypeInfo info = detect_finite_type(c, tau);
  const double alpha = mu.alpha();
  const ExponentPair pair(p, q, d, alpha);
  if (!pair.admissible()) throw PreconditionError("exponent pair is not admissible");
  audit_or_throw(mu);
  FiniteTypeReport rep;
  rep.a = info.a;
  rep.tau = tau;
  rep.beta = pair.beta();
  rep.sigma = sigma_exponent(info.a, alpha);
  rep.rate_target = rep.sigma * (1.0 - pair.edge());
  rep.block_lambda = lambdas.back();
  const double lam = rep.block_lambda;
  const int n = odd_resolution(o.radius, o.spacing);

  std::vector<TestFunction> pieces;
  for (int j = 0; j < o.blocks; ++j) {
    const double hj = (1.0 - tau) * std::ldexp(1.0, -j);
    BlockNorm b;
    b.j = j;
    b.lo = tau + 0.5 * hj;
    b.hi = tau + hj;
    const double lo = std::max(b.lo, f.lo()), hi = std::min(b.hi, f.hi());
    const TestFunction fj = (f.is_zero() || !(hi > lo)) ? TestFunction::zero() : f.restricted(lo, hi);
    pieces.push_back(fj);
    b.f_norm = weighted_norm(c, fj, alpha, p);
    if (b.f_norm > 0.0) {
      const PushforwardSpec ps(info.a, hj, info.frame.m.transpose());
      const WindowSample w = window_sample(mu, ps.map().inverse(), o.radius / lam, n);
      b.norm = window_norm(weighted_extension_eval(c, fj, lam, w.targets, alpha, o.engine).values, w.weights, q);
      b.ratio = b.norm / b.f_norm;
    }
    rep.blocks.push_back(b);
  }
  {
    const double cut = tau + (1.0 - tau) * std::ldexp(1.0, -o.blocks);
    const double lo = std::max(tau, f.lo()), hi = std::min(cut, f.hi());
    pieces.push_back((f.is_zero() || !(hi > lo)) ? TestFunction::zero() : f.restricted(lo, hi));
  }

  std::vector<double> js, rs;
  rep.max_step_ratio = 0.0;
  for (std::size_t j = 0; j < rep.blocks.size(); ++j) {
    if (rep.blocks[j].ratio > 0.0) {
      js.push_back(std::ldexp(1.0, static_cast<int>(j)));
      rs.push_back(rep.blocks[j].ratio);
    }
    if (j > 0 && rep.blocks[j - 1].ratio > 0.0)
      rep.max_step_ratio = std::max(rep.max_step_ratio, rep.blocks[j].ratio / rep.blocks[j - 1].ratio);
  }
  const SlopeFit bf = fit_log2(js, rs);
  rep.rate = -bf.slope;
  rep.rate_half_width = bf.half_width;
  rep.decay_ok = js.size() >= 2 && std::abs(rep.rate - rep.rate_target) <= kBlockRateTolerance;
  rep.summable_ok = js.size() >= 2 && rep.max_step_ratio <= kSummabilityRatio;

  ScalingOptions so;
  so.radius = o.radius;
  so.spacing = o.spacing;
  so.weight_alpha = alpha;
  so.sensitivity = false;
  so.audit = false;
  so.engine = o.engine;
  rep.aggregate = scaling_experiment(c, mu, fixed_family({{f.describe(), f}}), p, q, lambdas, so);
  rep.aggregate.label = "single-function";
  const Mat I = Mat::Identity(d, d);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lambda = lambdas[i];
    const WindowSample w = window_sample(mu, I, o.radius / lambda, n);
    double sum = 0.0;
    for (const auto& piece : pieces)
      if (!piece.is_zero())
        sum += window_norm(weighted_extension_eval(c, piece, lambda, w.targets, alpha, o.engine).values, w.weights, q);
    rep.block_sums.push_back(sum);
    const double agg = rep.aggregate.points[i].lq;
    rep.triangle_ok = rep.triangle_ok && agg <= sum * (1.0 + 1e-9) + 1e-14;
  }
  return rep;
}

}  // namespace curvelab
