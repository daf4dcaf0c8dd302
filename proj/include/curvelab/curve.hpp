// SPDX-License-Identifier: Apache-2.0
//
// Polynomial space curves on [0,1]: derivatives, torsion, frames,
// normalization, finite-type detection and affine weights.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "curvelab/errors.hpp"
#include "curvelab/polynomial.hpp"

namespace curvelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Strictly increasing positive integers (a_1, ..., a_d).
class ExponentTuple {
 public:
  ExponentTuple() = default;
  explicit ExponentTuple(std::vector<int> a) : a_(std::move(a)) {
    if (a_.empty()) throw DomainError("exponent tuple must be nonempty");
    if (a_[0] < 1) throw DomainError("exponent tuple entries must be positive");
    for (std::size_t i = 1; i < a_.size(); ++i)
      if (a_[i] <= a_[i - 1]) throw DomainError("exponent tuple must be strictly increasing");
  }

  static ExponentTuple standard(int d) {
    std::vector<int> a(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = i + 1;
    return ExponentTuple(std::move(a));
  }

  int size() const noexcept { return static_cast<int>(a_.size()); }
  int operator[](int i) const { return a_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& values() const noexcept { return a_; }
  int sum() const noexcept {
    int s = 0;
    for (int v : a_) s += v;
    return s;
  }
  int last() const { return a_.back(); }
  bool nondegenerate() const noexcept {
    for (std::size_t i = 0; i < a_.size(); ++i)
      if (a_[i] != static_cast<int>(i) + 1) return false;
    return true;
  }
  /// sum(a_i) - d(d+1)/2, the vanishing order of the model torsion at 0.
  int torsion_order() const noexcept {
    const int d = size();
    return sum() - d * (d + 1) / 2;
  }
  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < a_.size(); ++i) s += (i ? "," : "") + std::to_string(a_[i]);
    return s + ")";
  }
  friend bool operator==(const ExponentTuple&, const ExponentTuple&) = default;

 private:
  std::vector<int> a_;
};

class CurveSpec {
 public:
  CurveSpec() = default;

  /// `order_bound` <= 0 selects max(d + 1, degree + 1, a_d + 1).
  CurveSpec(std::vector<Polynomial> components, int order_bound = 0, std::string name = "curve",
            std::optional<ExponentTuple> tuple = std::nullopt)
      : comps_(std::move(components)), name_(std::move(name)), tuple_(std::move(tuple)) {
    if (comps_.size() < 1) throw DomainError("curve needs at least one component");
    if (tuple_ && tuple_->size() != dimension())
      throw DomainError("tuple length differs from curve dimension");
    int deg = 0;
    for (const auto& p : comps_) deg = std::max(deg, p.degree());
    int k = std::max(dimension() + 1, deg + 1);
    if (tuple_) k = std::max(k, tuple_->last() + 1);
    order_bound_ = order_bound > 0 ? order_bound : k;
  }

  /// (t, t^2/2!, ..., t^d/d!).
  static CurveSpec model(int d) { return model(ExponentTuple::standard(d)); }

  /// (t^{a_1}/a_1!, ..., t^{a_d}/a_d!).
  static CurveSpec model(const ExponentTuple& a) {
    std::vector<Polynomial> c;
    for (int v : a.values()) c.push_back(Polynomial::monomial(v, 1.0 / factorial(v)));
    return CurveSpec(std::move(c), a.last() + 1,
                     a.nondegenerate() ? "model" : "model" + a.str(), a);
  }

  /// (t^{a_1} phi_1(t), ..., t^{a_d} phi_d(t)).
  static CurveSpec monomial_type(const ExponentTuple& a, const std::vector<Polynomial>& phi,
                                 int order_bound = 0, std::string name = "monomial-type") {
    if (static_cast<int>(phi.size()) != a.size()) throw DomainError("phi count differs from tuple");
    std::vector<Polynomial> c;
    for (int i = 0; i < a.size(); ++i) c.push_back(phi[static_cast<std::size_t>(i)].shifted_up(a[i]));
    return CurveSpec(std::move(c), order_bound, std::move(name), a);
  }

  int dimension() const noexcept { return static_cast<int>(comps_.size()); }
  int order_bound() const noexcept { return order_bound_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<ExponentTuple>& tuple() const noexcept { return tuple_; }
  const std::vector<Polynomial>& components() const noexcept { return comps_; }
  const Polynomial& component(int i) const { return comps_[static_cast<std::size_t>(i)]; }

  /// gamma^{(k)}(t).
  Vec derivative(double t, int k) const {
    if (k > order_bound_)
      throw CapabilityError("derivative order " + std::to_string(k) + " exceeds order bound " +
                            std::to_string(order_bound_));
    Vec v(dimension());
    for (int i = 0; i < dimension(); ++i) v[i] = comps_[static_cast<std::size_t>(i)].eval(t, k);
    return v;
  }
  Vec operator()(double t) const { return derivative(t, 0); }

  /// Largest |gamma^{(k)}| over [0,1] bounded through coefficient sums.
  double derivative_bound(int k) const {
    double s2 = 0.0;
    for (const auto& p : comps_) {
      const Polynomial q = p.derivative(k);
      double s = 0.0;
      for (double c : q.coeffs()) s += std::abs(c);
      s2 += s * s;
    }
    return std::sqrt(s2);
  }

 private:
  std::vector<Polynomial> comps_;
  int order_bound_ = 0;
  std::string name_;
  std::optional<ExponentTuple> tuple_;
};

/// gamma(t), gamma'(t), ..., gamma^{(max_order)}(t).
inline std::vector<Vec> eval_derivatives(const CurveSpec& c, double t, int max_order) {
  if (max_order > c.order_bound())
    throw CapabilityError("derivative order " + std::to_string(max_order) +
                          " exceeds order bound " + std::to_string(c.order_bound()));
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(max_order) + 1);
  for (int k = 0; k <= max_order; ++k) out.push_back(c.derivative(t, k));
  return out;
}

/// Determinant with Gaussian elimination and partial pivoting; exact
/// closed forms for n <= 3.
inline double small_determinant(const Mat& m) {
  const auto n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (n == 3)
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  return m.partialPivLu().determinant();
}

/// Matrix whose k-th column is gamma^{(k)}(t), k = 1..d.
inline Mat derivative_matrix(const CurveSpec& c, double t) {
  const int d = c.dimension();
  Mat m(d, d);
  for (int k = 1; k <= d; ++k) m.col(k - 1) = c.derivative(t, k);
  return m;
}

/// det(gamma'(t), ..., gamma^{(d)}(t)).
inline double torsion(const CurveSpec& c, double t) {
  return small_determinant(derivative_matrix(c, t));
}

/// Minor on the given rows (0-based) and the leading |rows| derivative columns.
inline double minor_determinant(const CurveSpec& c, const std::vector<int>& rows, double t) {
  const int k = static_cast<int>(rows.size());
  Mat m(k, k);
  for (int j = 1; j <= k; ++j) {
    const Vec v = c.derivative(t, j);
    for (int i = 0; i < k; ++i) {
      const int r = rows[static_cast<std::size_t>(i)];
      if (r < 0 || r >= c.dimension()) throw DomainError("minor row index out of range");
      m(i, j - 1) = v[r];
    }
  }
  return small_determinant(m);
}

/// beta(alpha) = (j+1) alpha + (d-j-1)(d-j)/2 for d-j-1 < alpha <= d-j.
inline double beta_alpha(double alpha, int d) {
  if (d < 1) throw DomainError("dimension must be positive");
  if (!(alpha > 0.0) || alpha > d) throw DomainError("alpha must lie in (0, d]");
  const int j = d - static_cast<int>(std::ceil(alpha));
  return (j + 1) * alpha + 0.5 * (d - j - 1) * (d - j);
}

/// sigma = (sum a_i - d(d+1)/2) / beta(alpha) + 1.
inline double sigma_exponent(const ExponentTuple& a, double alpha) {
  return a.torsion_order() / beta_alpha(alpha, a.size()) + 1.0;
}

/// |torsion|^{1/beta(alpha)}.
inline double affine_weight(const CurveSpec& c, double alpha, double t) {
  return std::pow(std::abs(torsion(c, t)), 1.0 / beta_alpha(alpha, c.dimension()));
}

struct FrameMatrix {
  Mat m;
  std::string curve;
  double tau = 0.0;
  ExponentTuple a;

  double det() const { return small_determinant(m); }
  /// True when |det| is below 1e-9 times the product of column norms.
  bool singular() const {
    double scale = 1.0;
    for (int j = 0; j < m.cols(); ++j) scale *= m.col(j).norm();
    return !(std::abs(det()) > 1e-9 * scale) || scale == 0.0;
  }
};

/// Columns gamma^{(a_i)}(tau).
inline FrameMatrix frame_matrix(const CurveSpec& c, double tau, const ExponentTuple& a) {
  if (a.size() != c.dimension()) throw DomainError("tuple length differs from curve dimension");
  FrameMatrix f;
  f.m.resize(c.dimension(), c.dimension());
  for (int i = 0; i < a.size(); ++i) f.m.col(i) = c.derivative(tau, a[i]);
  f.curve = c.name();
  f.tau = tau;
  f.a = a;
  return f;
}

/// diag(h^{a_1}, ..., h^{a_d}).
inline Mat dilation(double h, const ExponentTuple& a) {
  Mat m = Mat::Zero(a.size(), a.size());
  for (int i = 0; i < a.size(); ++i) m(i, i) = std::pow(h, a[i]);
  return m;
}

/// [M D_h^a]^{-1} (gamma(h t + tau) - gamma(tau)) in closed form.
inline CurveSpec normalize_curve(const CurveSpec& c, double tau, double h, const ExponentTuple& a) {
  const int d = c.dimension();
  if (h == 0.0) throw DomainError("normalization scale h must be nonzero");
  const double lo = std::min(tau, tau + h), hi = std::max(tau, tau + h);
  if (lo < -1e-12 || hi > 1.0 + 1e-12) throw DomainError("[tau, tau+h] must lie inside [0,1]");
  const FrameMatrix f = frame_matrix(c, tau, a);
  if (f.singular()) throw SingularFrameError("singular frame at tau = " + std::to_string(tau), std::abs(f.det()));
  const Mat n = f.m * dilation(h, a);
  const Eigen::PartialPivLU<Mat> lu(n);

  int deg = 0;
  for (const auto& p : c.components()) deg = std::max(deg, p.degree());
  std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(d),
                                          std::vector<double>(static_cast<std::size_t>(deg) + 1, 0.0));
  double hk = 1.0;
  for (int k = 1; k <= deg; ++k) {
    hk *= h;
    Vec b(d);
    for (int i = 0; i < d; ++i) b[i] = c.component(i).eval(tau, k) * hk / factorial(k);
    const Vec x = lu.solve(b);
    for (int i = 0; i < d; ++i) coeffs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = x[i];
  }
  // Coordinates below the tuple order vanish identically; clear roundoff.
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < a[i] && k <= deg; ++k) coeffs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = 0.0;
  std::vector<Polynomial> comps;
  for (auto& v : coeffs) comps.emplace_back(std::move(v));
  return CurveSpec(std::move(comps), c.order_bound(), c.name() + "|normalized", a);
}

struct ClassDistance {
  std::string curve;
  std::optional<ExponentTuple> model;  // empty: plain model curve
  double epsilon = 0.0;
};

inline constexpr int kSupGrid = 4097;
inline constexpr double kSupSafety = 1.01;

/// Approximate C^k distance to the model, sampled on a 4097-point grid and
/// inflated by 1.01. Without a tuple the comparison is gamma vs the plain
/// model curve in C^{d+1}; with a tuple it is phi_i vs 1/a_i! in C^{a_d+1}.
/// A curve that is not of the monomial form for the tuple has distance +inf.
inline ClassDistance class_distance(const CurveSpec& c, const std::optional<ExponentTuple>& model = std::nullopt) {
  ClassDistance out{c.name(), model, 0.0};
  const int d = c.dimension();
  std::vector<Polynomial> diffs;
  int order = 0;
  if (!model) {
    order = d + 1;
    if (c.order_bound() < order) throw CapabilityError("class distance needs order bound >= d+1");
    const CurveSpec m = CurveSpec::model(d);
    for (int i = 0; i < d; ++i) diffs.push_back(c.component(i) + (-1.0) * m.component(i));
  } else {
    if (model->size() != d) throw DomainError("tuple length differs from curve dimension");
    order = model->last() + 1;
    if (c.order_bound() < order) throw CapabilityError("class distance needs order bound >= a_d+1");
    for (int i = 0; i < d; ++i) {
      const Polynomial& p = c.component(i);
      const double scale = std::max(1.0, p.max_abs_coeff());
      for (int k = 0; k < (*model)[i]; ++k)
        if (std::abs(p.coeff(k)) > 1e-12 * scale) {
          out.epsilon = std::numeric_limits<double>::infinity();
          return out;
        }
      diffs.push_back(p.shifted_down((*model)[i]) + Polynomial::constant(-1.0 / factorial((*model)[i])));
    }
  }
  std::vector<std::vector<Polynomial>> ders(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i)
    for (int k = 0; k <= order; ++k) ders[i].push_back(diffs[i].derivative(k));
  double sup = 0.0;
  for (int g = 0; g < kSupGrid; ++g) {
    const double t = static_cast<double>(g) / (kSupGrid - 1);
    for (int k = 0; k <= order; ++k) {
      if (!model) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < diffs.size(); ++i) {
          const double v = ders[i][static_cast<std::size_t>(k)](t);
          s2 += v * v;
        }
        sup = std::max(sup, std::sqrt(s2));
      } else {
        for (std::size_t i = 0; i < diffs.size(); ++i)
          sup = std::max(sup, std::abs(ders[i][static_cast<std::size_t>(k)](t)));
      }
    }
  }
  out.epsilon = sup * kSupSafety;
  return out;
}

struct FiniteTypeInfo {
  ExponentTuple a;
  FrameMatrix frame;
  std::vector<Polynomial> phi;  // gamma(t+tau)-gamma(tau) = M (t^{a_k} phi_k(t))_k

  double phi_value(int k, double t) const { return phi[static_cast<std::size_t>(k)](t); }
};

inline constexpr int kFiniteTypeScan = 12;

/// Greedy scan: a_k is the smallest order whose derivative at tau leaves the
/// span of the earlier selected ones (relative residual > 1e-9).
inline FiniteTypeInfo detect_finite_type(const CurveSpec& c, double tau) {
  const int d = c.dimension();
  const int lmax = std::min(c.order_bound(), kFiniteTypeScan);
  std::vector<Vec> basis;
  std::vector<int> picked;
  double scale = 0.0;
  for (int l = 1; l <= lmax && static_cast<int>(picked.size()) < d; ++l) {
    const Vec v = c.derivative(tau, l);
    scale = std::max(scale, v.norm());
    Vec r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : basis) r -= q.dot(r) * q;
    if (scale > 0.0 && r.norm() > 1e-9 * scale) {
      basis.push_back(r / r.norm());
      picked.push_back(l);
    }
  }
  if (static_cast<int>(picked.size()) < d)
    throw NotFiniteTypeError("curve '" + c.name() + "' is not of finite type within order budget " +
                             std::to_string(lmax) + " at tau = " + std::to_string(tau));
  FiniteTypeInfo info{ExponentTuple(picked), frame_matrix(c, tau, ExponentTuple(picked)), {}};
  const Eigen::PartialPivLU<Mat> lu(info.frame.m);
  int deg = 0;
  for (const auto& p : c.components()) deg = std::max(deg, p.degree());
  std::vector<std::vector<double>> coef(static_cast<std::size_t>(d));
  for (int k = 1; k <= deg; ++k) {
    Vec b(d);
    for (int i = 0; i < d; ++i) b[i] = c.component(i).eval(tau, k) / factorial(k);
    const Vec x = lu.solve(b);
    for (int i = 0; i < d; ++i)
      if (k >= info.a[i]) coef[static_cast<std::size_t>(i)].push_back(x[i]);
  }
  for (auto& v : coef) {
    if (v.empty()) v.push_back(0.0);
    info.phi.emplace_back(std::move(v));
  }
  return info;
}

/// max relative deviation of |det M|^{1/beta} |h|^{sigma-1} w_{normalized}(t)
/// from w_gamma(h t + tau) over the grid.
inline double weight_scaling_check(const CurveSpec& c, double tau, double h, const ExponentTuple& a,
                                   double alpha, const std::vector<double>& tgrid) {
  const CurveSpec g = normalize_curve(c, tau, h, a);
  const double beta = beta_alpha(alpha, c.dimension());
  const double detm = std::abs(frame_matrix(c, tau, a).det());
  const double factor = std::pow(detm, 1.0 / beta) * std::pow(std::abs(h), sigma_exponent(a, alpha) - 1.0);
  double worst = 0.0;
  for (double t : tgrid) {
    const double lhs = factor * affine_weight(g, alpha, t);
    const double rhs = affine_weight(c, alpha, h * t + tau);
    const double den = std::max(std::abs(lhs), std::abs(rhs));
    if (den == 0.0) continue;
    worst = std::max(worst, std::abs(lhs - rhs) / den);
  }
  return worst;
}

struct JacobianProbe {
  ExponentTuple b;
  std::vector<double> t;

  JacobianProbe(ExponentTuple tuple, std::vector<double> pts) : b(std::move(tuple)), t(std::move(pts)) {
    if (static_cast<int>(t.size()) != b.size()) throw DomainError("probe size differs from tuple");
    if (t.size() < 1) throw DomainError("probe needs at least one point");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < 0.0 || t[i] > 1.0) throw DomainError("probe point outside [0,1]");
      if (i && t[i] < t[i - 1]) throw DomainError("probe points must be ordered");
    }
  }
  int n() const noexcept { return b.size(); }
};

struct GammaSum {
  Vec point;
  double jacobian = 0.0;
};

/// sum gamma(t_i) and det(gamma'(t_1), ..., gamma'(t_d)).
inline GammaSum gamma_sum_map(const CurveSpec& c, const std::vector<double>& t) {
  const int d = c.dimension();
  if (static_cast<int>(t.size()) != d) throw DomainError("need exactly d parameters");
  GammaSum out{Vec::Zero(d), 0.0};
  Mat j(d, d);
  for (int i = 0; i < d; ++i) {
    out.point += c(t[static_cast<std::size_t>(i)]);
    j.col(i) = c.derivative(t[static_cast<std::size_t>(i)], 1);
  }
  out.jacobian = small_determinant(j);
  return out;
}

}  // namespace curvelab
