// SPDX-License-Identifier: Apache-2.0
//
// Least-squares slopes on log2-log2 data.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace curvelab {

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double half_width = std::numeric_limits<double>::infinity();  // 95% confidence
  std::size_t n = 0;
};

/// Two-sided 97.5% Student-t quantile.
inline double student_t975(std::size_t dof) {
  static const double table[] = {0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201, 2.179,  2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
  return dof < std::size(table) ? table[dof] : 1.96 + 2.5 / static_cast<double>(dof);
}

/// Fit log2 y = slope log2 x + intercept. Points with nonpositive x or y
/// are skipped.
inline SlopeFit fit_log2(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log2(x[i]));
      ly.push_back(std::log2(y[i]));
    }
  SlopeFit f;
  f.n = lx.size();
  if (f.n < 2) return f;
  const double n = static_cast<double>(f.n);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < f.n; ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (f.n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
      const double e = ly[i] - f.intercept - f.slope * lx[i];
      rss += e * e;
    }
    f.half_width = student_t975(f.n - 2) * std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

inline double log2_slope(const std::vector<double>& x, const std::vector<double>& y) { return fit_log2(x, y).slope; }

}  // namespace curvelab
