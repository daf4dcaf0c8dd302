// SPDX-License-Identifier: Apache-2.0
//
// Dense power-basis polynomials with exact differentiation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace curvelab {

/// n!/(n-k)!, the k-th falling factorial of n. Zero when k > n >= 0.
inline double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(n - i);
  return r;
}

inline double factorial(int n) { return falling_factorial(n, n); }

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return falling_factorial(n, k) / factorial(k);
}

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  static Polynomial monomial(int degree, double coeff = 1.0) {
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
  }
  static Polynomial constant(double v) { return Polynomial({v}); }

  const std::vector<double>& coeffs() const noexcept { return c_; }

  /// Degree ignoring trailing exact zeros; -1 for the zero polynomial.
  int degree() const noexcept {
    for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i)
      if (c_[static_cast<std::size_t>(i)] != 0.0) return i;
    return -1;
  }

  double coeff(int i) const noexcept {
    return (i >= 0 && static_cast<std::size_t>(i) < c_.size())
               ? c_[static_cast<std::size_t>(i)]
               : 0.0;
  }

  double operator()(double t) const noexcept { return eval(t, 0); }

  /// k-th derivative at t, by Horner on the differentiated coefficients.
  double eval(double t, int k) const noexcept {
    const int n = static_cast<int>(c_.size());
    if (k >= n) return 0.0;
    double acc = 0.0;
    for (int i = n - 1; i >= k; --i)
      acc = acc * t + c_[static_cast<std::size_t>(i)] * falling_factorial(i, k);
    return acc;
  }

  Polynomial derivative(int k = 1) const {
    const int n = static_cast<int>(c_.size());
    if (k >= n) return Polynomial({0.0});
    std::vector<double> d(static_cast<std::size_t>(n - k));
    for (int i = k; i < n; ++i)
      d[static_cast<std::size_t>(i - k)] =
          c_[static_cast<std::size_t>(i)] * falling_factorial(i, k);
    return Polynomial(std::move(d));
  }

  /// Coefficients of t -> p(h t + tau).
  Polynomial affine_compose(double h, double tau) const {
    const int n = static_cast<int>(c_.size());
    std::vector<double> out(static_cast<std::size_t>(std::max(n, 1)), 0.0);
    double hk = 1.0;
    for (int k = 0; k < n; ++k) {
      out[static_cast<std::size_t>(k)] = eval(tau, k) * hk / factorial(k);
      hk *= h;
    }
    return Polynomial(std::move(out));
  }

  /// p(t) * t^shift.
  Polynomial shifted_up(int shift) const {
    std::vector<double> out(static_cast<std::size_t>(shift), 0.0);
    out.insert(out.end(), c_.begin(), c_.end());
    return Polynomial(std::move(out));
  }

  /// Drops the first `shift` coefficients, i.e. p(t) / t^shift when divisible.
  Polynomial shifted_down(int shift) const {
    if (static_cast<std::size_t>(shift) >= c_.size()) return Polynomial({0.0});
    return Polynomial(std::vector<double>(c_.begin() + shift, c_.end()));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> out(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] += b.c_[i];
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(double s, const Polynomial& p) {
    std::vector<double> out = p.c_;
    for (double& v : out) v *= s;
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return Polynomial({0.0});
    std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  double max_abs_coeff() const noexcept {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<double> c_;
};

}  // namespace curvelab
