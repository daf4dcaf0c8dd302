// SPDX-License-Identifier: Apache-2.0
//
// Jacobian of the sum map t -> gamma(t_1) + ... + gamma(t_n) for
// monomial-type curves, through the iterated-integral recursion on the
// leading minors Phi_k, and its product-form lower bound.
#pragma once

#include <cmath>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/quadrature.hpp"

namespace curvelab {

/// Leading minors of the matrix Phi_{i,j}(t) with d^j/dt^j (t^{b_i} phi_i) =
/// t^{b_i - j} Phi_{i,j}(t).
class MinorTable {
 public:
  MinorTable(const CurveSpec& c, const ExponentTuple& b) : b_(b) {
    if (b.size() != c.dimension()) throw DomainError("tuple length differs from curve dimension");
    for (int i = 0; i < b.size(); ++i) {
      const Polynomial& p = c.component(i);
      const double scale = std::max(1.0, p.max_abs_coeff());
      for (int k = 0; k < b[i]; ++k)
        if (std::abs(p.coeff(k)) > 1e-12 * scale)
          throw DomainError("component " + std::to_string(i + 1) + " does not vanish to order " +
                            std::to_string(b[i]) + " at 0");
      phi_.push_back(p.shifted_down(b[i]));
    }
    const int n = b.size();
    // entries_[i][j-1] is the polynomial Phi_{i,j}.
    entries_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 1; j <= n; ++j) {
        Polynomial acc({0.0});
        for (int k = 0; k <= j; ++k) {
          const double c0 = binomial(j, k) * falling_factorial(b[i], j - k);
          if (c0 == 0.0) continue;
          acc = acc + c0 * phi_[static_cast<std::size_t>(i)].derivative(k).shifted_up(k);
        }
        entries_[static_cast<std::size_t>(i)].push_back(acc);
      }
  }

  int n() const noexcept { return b_.size(); }
  const ExponentTuple& tuple() const noexcept { return b_; }
  const std::vector<Polynomial>& phi() const noexcept { return phi_; }

  double entry(int i, int j, double t) const {
    return entries_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)](t);
  }

  /// Phi_k(t); Phi_{-1} = Phi_0 = 1.
  double minor(int k, double t) const {
    if (k <= 0) return 1.0;
    Mat m(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 1; j <= k; ++j) m(i, j - 1) = entry(i, j, t);
    return small_determinant(m);
  }

  /// b_k with b_0 = 0 (1-based).
  int b(int k) const { return k <= 0 ? 0 : b_[k - 1]; }

 private:
  ExponentTuple b_;
  std::vector<Polynomial> phi_;
  std::vector<std::vector<Polynomial>> entries_;
};

namespace detail {

inline double ik_prefactor(const MinorTable& tab, int k, double t) {
  const int n = tab.n();
  const int e = tab.b(n - k + 1) - tab.b(n - k) - 1;
  const double den = tab.minor(n - k, t);
  return std::pow(t, e) * tab.minor(n - k - 1, t) * tab.minor(n - k + 1, t) / (den * den);
}

inline double ik_value(const MinorTable& tab, int k, const std::vector<double>& t, const AdaptiveOptions& opt);

// Integral of I_{k-1} over the box s_i in [t_i, t_{i+1}], i = 1..k-1,
// with s_1..s_{m-1} already fixed in `s`.
inline double ik_box(const MinorTable& tab, int k, const std::vector<double>& t, std::vector<double>& s,
                     const AdaptiveOptions& opt) {
  const std::size_t m = s.size();
  if (static_cast<int>(m) == k - 1) return ik_value(tab, k - 1, s, opt);
  const double lo = t[m], hi = t[m + 1];
  auto inner = [&](double x) {
    s.push_back(x);
    const double v = ik_box(tab, k, t, s, opt);
    s.pop_back();
    return v;
  };
  return integrate_adaptive(inner, lo, hi, opt);
}

inline double ik_value(const MinorTable& tab, int k, const std::vector<double>& t, const AdaptiveOptions& opt) {
  double pre = 1.0;
  for (int l = 0; l < k; ++l) pre *= ik_prefactor(tab, k, t[static_cast<std::size_t>(l)]);
  if (k == 1) return pre;
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(k));
  return pre * ik_box(tab, k, t, s, opt);
}

}  // namespace detail

/// I_n(t_1, ..., t_n) by the recursion; equals det(gamma'(t_1), ..., gamma'(t_n)).
inline double ik_recursion(const CurveSpec& c, const JacobianProbe& probe, const AdaptiveOptions& opt = {}) {
  if (probe.n() != c.dimension()) throw DomainError("probe size differs from curve dimension");
  const MinorTable tab(c, probe.b);
  return detail::ik_value(tab, probe.n(), probe.t, opt);
}

/// 1 / (2 prod_{i=1}^n (i-1)!).
inline double jacobian_lower_constant(int n) {
  double p = 2.0;
  for (int i = 1; i <= n; ++i) p *= factorial(i - 1);
  return 1.0 / p;
}

/// C prod_i |torsion of the model curve at t_i|^{1/n} prod_{i<j} (t_j - t_i).
inline double jacobian_lower_bound(const ExponentTuple& b, const std::vector<double>& t) {
  const int n = b.size();
  const CurveSpec model = CurveSpec::model(b);
  double v = jacobian_lower_constant(n);
  for (double ti : t) v *= std::pow(std::abs(torsion(model, ti)), 1.0 / n);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) v *= t[j] - t[i];
  return v;
}

}  // namespace curvelab
