// SPDX-License-Identifier: Apache-2.0
//
// Test functions on [0, 1]: interval indicators, smooth bumps, random
// trigonometric polynomials and restrictions to subintervals, with
// L^p norms.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "curvelab/errors.hpp"
#include "curvelab/quadrature.hpp"
#include "curvelab/random.hpp"

namespace curvelab {

class TestFunction {
 public:
  enum class Kind { Zero, Indicator, Bump, TrigPoly, Restricted };

  static TestFunction zero() { return TestFunction(Kind::Zero, 0.0, 0.0); }

  static TestFunction indicator(double a, double b) {
    check_interval(a, b);
    return TestFunction(Kind::Indicator, a, b);
  }

  /// sin(pi (t - a) / (b - a))^(2 power) on [a, b].
  static TestFunction bump(double a, double b, int power = 2) {
    check_interval(a, b);
    if (power < 1) throw DomainError("bump power must be at least 1");
    TestFunction f(Kind::Bump, a, b);
    f.power_ = power;
    return f;
  }

  /// sum_n c_n cos(2 pi n u) + s_n sin(2 pi n u), u = (t - a) / (b - a), on [a, b].
  static TestFunction trig_poly(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs, double a = 0.0,
                                double b = 1.0) {
    check_interval(a, b);
    const std::size_t n = std::max(cos_coeffs.size(), sin_coeffs.size());
    if (n == 0) throw DomainError("trigonometric polynomial needs coefficients");
    cos_coeffs.resize(n, 0.0);
    sin_coeffs.resize(n, 0.0);
    TestFunction f(Kind::TrigPoly, a, b);
    f.cos_ = std::move(cos_coeffs);
    f.sin_ = std::move(sin_coeffs);
    return f;
  }

  /// Random coefficients uniform in [-1, 1] / (1 + n) up to the given degree.
  static TestFunction random_trig_poly(std::uint64_t seed, int degree, double a = 0.0, double b = 1.0) {
    if (degree < 0) throw DomainError("degree must be nonnegative");
    Rng rng(seed);
    std::vector<double> c, s;
    for (int n = 0; n <= degree; ++n) {
      c.push_back(rng.uniform(-1.0, 1.0) / (1.0 + n));
      s.push_back(n == 0 ? 0.0 : rng.uniform(-1.0, 1.0) / (1.0 + n));
    }
    return trig_poly(std::move(c), std::move(s), a, b);
  }

  /// f times the indicator of [a, b].
  TestFunction restricted(double a, double b) const {
    check_interval(a, b);
    const double lo = std::max(a, lo_), hi = std::min(b, hi_);
    if (kind_ == Kind::Zero || lo >= hi) return zero();
    if (kind_ == Kind::Indicator) {
      TestFunction f = indicator(lo, hi);
      f.amp_ = amp_;
      return f;
    }
    TestFunction f(Kind::Restricted, lo, hi);
    f.inner_ = std::make_shared<const TestFunction>(*this);
    return f;
  }

  /// t -> |h| f(h t + tau), supported in [0, 1] when f lives in [tau, tau + h].
  TestFunction affine_pullback(double h, double tau) const { return pullback(h, tau, true); }

  TestFunction scaled(double c) const {
    TestFunction f = *this;
    f.amp_ *= c;
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double amplitude() const noexcept { return amp_; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero || amp_ == 0.0; }

  double operator()(double t) const {
    if (kind_ == Kind::Zero || t < lo_ || t > hi_) return 0.0;
    return amp_ * shape(t);
  }

  /// Upper bound on the angular frequency content of f on its support.
  double bandwidth() const {
    switch (kind_) {
      case Kind::Bump: return 2.0 * std::numbers::pi * power_ / (hi_ - lo_);
      case Kind::TrigPoly: return 2.0 * std::numbers::pi * static_cast<double>(cos_.size() - 1) / (hi_ - lo_);
      case Kind::Restricted: return inner_->bandwidth();
      default: return 0.0;
    }
  }

  /// Points where f may fail to be smooth.
  std::vector<double> breakpoints() const {
    if (kind_ == Kind::Zero) return {};
    std::vector<double> p{lo_, hi_};
    if (kind_ == Kind::Restricted)
      for (double x : inner_->breakpoints())
        if (x > lo_ && x < hi_) p.push_back(x);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
  }

  /// ||f||_p for p in [1, inf].
  double norm(double p) const {
    if (!(p >= 1.0)) throw DomainError("norm exponent must be at least 1");
    if (is_zero()) return 0.0;
    const double len = hi_ - lo_, a = std::abs(amp_);
    const bool inf = std::isinf(p);
    if (kind_ == Kind::Indicator) return inf ? a : a * std::pow(len, 1.0 / p);
    if (kind_ == Kind::Bump) {
      if (inf) return a;
      // int_0^1 sin(pi u)^(2m) du = Gamma(m + 1/2) / (sqrt(pi) Gamma(m + 1)).
      const double m = power_ * p;
      const double i = std::exp(std::lgamma(m + 0.5) - std::lgamma(m + 1.0)) / std::sqrt(std::numbers::pi);
      return a * std::pow(len * i, 1.0 / p);
    }
    return quadrature_norm(p);
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::Zero: os << "zero"; break;
      case Kind::Indicator: os << "indicator[" << lo_ << "," << hi_ << "]"; break;
      case Kind::Bump: os << "bump[" << lo_ << "," << hi_ << "]^" << power_; break;
      case Kind::TrigPoly: os << "trig[" << lo_ << "," << hi_ << "]deg" << cos_.size() - 1; break;
      case Kind::Restricted: os << "(" << inner_->describe() << ")|[" << lo_ << "," << hi_ << "]"; break;
    }
    if (amp_ != 1.0) os << "*" << amp_;
    return os.str();
  }

 private:
  TestFunction(Kind k, double a, double b) : kind_(k), lo_(a), hi_(b) {}

  static void check_interval(double a, double b) {
    if (!(a >= 0.0 && b <= 1.0 && a < b)) throw DomainError("support interval must satisfy 0 <= a < b <= 1");
  }

  TestFunction pullback(double h, double tau, bool check) const {
    if (h == 0.0) throw DomainError("pullback scale must be nonzero");
    if (kind_ == Kind::Zero) return zero();
    double a = (lo_ - tau) / h, b = (hi_ - tau) / h;
    if (a > b) std::swap(a, b);
    if (check) {
      if (a < -1e-12 || b > 1.0 + 1e-12) throw DomainError("pullback leaves [0, 1]");
      a = std::max(a, 0.0);
      b = std::min(b, 1.0);
    }
    TestFunction f = *this;
    f.lo_ = a;
    f.hi_ = b;
    f.amp_ = amp_ * std::abs(h);
    if (kind_ == Kind::TrigPoly && h < 0)
      for (double& s : f.sin_) s = -s;
    if (kind_ == Kind::Restricted) {
      TestFunction in = inner_->pullback(h, tau, false);
      in.amp_ = inner_->amp_;
      f.inner_ = std::make_shared<const TestFunction>(std::move(in));
    }
    return f;
  }

  double shape(double t) const {
    switch (kind_) {
      case Kind::Indicator: return 1.0;
      case Kind::Bump: {
        const double s = std::sin(std::numbers::pi * (t - lo_) / (hi_ - lo_));
        return std::pow(s * s, power_);
      }
      case Kind::TrigPoly: {
        const double u = 2.0 * std::numbers::pi * (t - lo_) / (hi_ - lo_);
        double v = 0.0;
        for (std::size_t n = 0; n < cos_.size(); ++n) {
          const double x = u * static_cast<double>(n);
          v += cos_[n] * std::cos(x) + sin_[n] * std::sin(x);
        }
        return v;
      }
      case Kind::Restricted: return (*inner_)(t);
      default: return 0.0;
    }
  }

  // Panels fine enough to resolve the oscillation of f, split further at
  // sign changes so |f|^p is smooth inside each piece.
  double quadrature_norm(double p) const {
    const auto bp = breakpoints();
    const bool inf = std::isinf(p);
    constexpr int kSamples = 64;
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
      const double a = bp[s], b = bp[s + 1];
      const int panels = std::max(4, static_cast<int>(std::ceil(2.0 * bandwidth() * (b - a) / std::numbers::pi)));
      const double w = (b - a) / panels;
      for (int k = 0; k < panels; ++k) {
        const double x0 = a + k * w, x1 = k + 1 == panels ? b : x0 + w;
        std::vector<double> cuts{x0};
        double prev = shape(x0);
        for (int i = 1; i <= kSamples; ++i) {
          const double x = i == kSamples ? x1 : x0 + w * i / kSamples, v = shape(x);
          if (inf) acc = std::max(acc, std::abs(amp_ * v));
          if (prev * v < 0.0) {
            double lo = x - w / kSamples, hi = x, flo = prev;
            for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
              const double m = 0.5 * (lo + hi), fm = shape(m);
              if (fm * flo <= 0.0) {
                hi = m;
              } else {
                lo = m;
                flo = fm;
              }
            }
            cuts.push_back(0.5 * (lo + hi));
          }
          prev = v;
        }
        if (inf) continue;
        cuts.push_back(x1);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
          const AdaptiveOptions opt{1e-13 * w, 40, 10};
          acc += integrate_adaptive([&](double t) { return std::pow(std::abs(amp_ * shape(t)), p); }, cuts[i],
                                    cuts[i + 1], opt);
        }
      }
    }
    return inf ? acc : std::pow(acc, 1.0 / p);
  }

  Kind kind_;
  double lo_ = 0.0, hi_ = 0.0, amp_ = 1.0;
  int power_ = 2;
  std::vector<double> cos_, sin_;
  std::shared_ptr<const TestFunction> inner_;
};

}  // namespace curvelab
