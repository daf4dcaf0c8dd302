// SPDX-License-Identifier: Apache-2.0
//
// Dyadic multilinear decomposition: at a point x, |T f(x)| is dominated
// either by one dyadic piece T f_I(x) at some level, or by the geometric
// mean of d pieces on pairwise separated intervals at the deepest level.
// The split is computed from tabulated piece values and returned as a
// certificate with explicit constants.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/engine.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/function.hpp"

namespace curvelab {

/// Closed interval [k 2^-e, (k+1) 2^-e].
struct DyadicInterval {
  int exponent = 0;
  std::int64_t index = 0;

  double lo() const { return std::ldexp(static_cast<double>(index), -exponent); }
  double hi() const { return std::ldexp(static_cast<double>(index + 1), -exponent); }
  std::string str() const {
    return "[" + std::to_string(index) + "/2^" + std::to_string(exponent) + "," + std::to_string(index + 1) +
           "/2^" + std::to_string(exponent) + "]";
  }
  bool operator==(const DyadicInterval&) const = default;
};

/// Distance between closed dyadic intervals in units of 2^-e, e >= both exponents.
inline std::int64_t dyadic_gap(const DyadicInterval& a, const DyadicInterval& b, int e) {
  if (e < a.exponent || e < b.exponent || e > 62) throw DomainError("dyadic unit finer than supported");
  const std::int64_t alo = a.index << (e - a.exponent), ahi = (a.index + 1) << (e - a.exponent);
  const std::int64_t blo = b.index << (e - b.exponent), bhi = (b.index + 1) << (e - b.exponent);
  return std::max<std::int64_t>({0, blo - ahi, alo - bhi});
}

/// True when every pair is at distance >= 2^-e_sep, in exact integer arithmetic.
inline bool dyadic_separated(const std::vector<DyadicInterval>& s, int e_sep) {
  int e = e_sep;
  for (const auto& i : s) e = std::max(e, i.exponent);
  const std::int64_t need = std::int64_t{1} << (e - e_sep);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (dyadic_gap(s[i], s[j], e) < need) return false;
  return true;
}

/// Levels 1..d-1 with lengths A_i = 2^-e_i, e_0 = 0 < e_1 < ... < e_{d-1}.
class DyadicFamily {
 public:
  explicit DyadicFamily(std::vector<int> exponents) : e_(std::move(exponents)) {
    if (e_.empty()) throw DomainError("dyadic family needs at least one level");
    int prev = 0;
    for (int e : e_) {
      if (e <= prev) throw DomainError("dyadic exponents must be positive and strictly increasing");
      prev = e;
    }
    if (e_.back() > 24) throw DomainError("deepest dyadic level limited to 2^-24");
  }

  /// A_i = 2^{-step i}, i = 1..d-1.
  static DyadicFamily standard(int d, int step = 4) {
    if (d < 2) throw DomainError("decomposition needs d >= 2");
    std::vector<int> e;
    for (int i = 1; i < d; ++i) e.push_back(step * i);
    return DyadicFamily(std::move(e));
  }

  int levels() const noexcept { return static_cast<int>(e_.size()); }
  int exponent(int i) const { return i == 0 ? 0 : e_[static_cast<std::size_t>(i - 1)]; }
  double A(int i) const { return std::ldexp(1.0, -exponent(i)); }
  std::int64_t count(int i) const { return std::int64_t{1} << exponent(i); }
  DyadicInterval interval(int i, std::int64_t k) const { return {exponent(i), k}; }
  const std::vector<int>& exponents() const noexcept { return e_; }
  std::string str() const {
    std::string s;
    for (int e : e_) s += (s.empty() ? "" : ",") + std::to_string(e);
    return "2^-{" + s + "}";
  }

 private:
  std::vector<int> e_;
};

/// T f_I(x) for every interval I at every level, plus T f(x).
struct IntervalTable {
  std::vector<int> exponents;
  std::string provenance;
  std::size_t targets = 0;
  std::vector<Complex> total;                               // [target]
  std::vector<std::vector<std::vector<Complex>>> values;    // [level-1][interval][target]
  std::vector<double> telescoping_residual;                 // per level, max over targets

  double modulus(int level, std::int64_t k, std::size_t x) const {
    return std::abs(values[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(k)][x]);
  }
};

inline IntervalTable interval_values(const CurveSpec& c, const TestFunction& f, const DyadicFamily& fam,
                                     double lambda, const TargetSet& x, const EngineOptions& opt = {}) {
  IntervalTable tab;
  tab.exponents = fam.exponents();
  tab.targets = x.size();
  std::ostringstream os;
  os.precision(17);
  os << c.name() << "|" << f.describe() << "|lambda=" << lambda << "|family=" << fam.str() << "|targets=" << x.size();
  tab.provenance = os.str();
  tab.total = extension_eval(c, f, lambda, x, opt).values;
  for (int i = 1; i <= fam.levels(); ++i) {
    std::vector<std::vector<Complex>> level;
    std::vector<Complex> sum(x.size(), Complex{});
    for (std::int64_t k = 0; k < fam.count(i); ++k) {
      const DyadicInterval I = fam.interval(i, k);
      const TestFunction piece = f.restricted(I.lo(), I.hi());
      std::vector<Complex> v = piece.is_zero() ? std::vector<Complex>(x.size(), Complex{})
                                               : extension_eval(c, piece, lambda, x, opt).values;
      for (std::size_t t = 0; t < x.size(); ++t) sum[t] += v[t];
      level.push_back(std::move(v));
    }
    double res = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) res = std::max(res, std::abs(sum[t] - tab.total[t]));
    tab.telescoping_residual.push_back(res);
    tab.values.push_back(std::move(level));
  }
  return tab;
}

/// Constants of the split. Single terms at level i carry single[i-1];
/// a separated (j+1)-tuple at level j carries tuple[j-1].
struct DecompositionConstants {
  double threshold = 100.0;
  std::vector<double> single;
  std::vector<double> tuple;
  std::vector<double> single_structural;  // A_{i-1}^{-2(i-1)}
  double tuple_structural = 1.0;          // A_{d-1}^{-2(d-1)}

  double total() const { return std::accumulate(single.begin(), single.end(), 0.0) + tuple.back(); }
};

/// With threshold tau and near fraction q = 3/tau:
///   single_1 = tau, tuple_1 = A_1^{-1} / (1 - q),
///   single_j = tau tuple_{j-1},
///   tuple_j = tuple_{j-1} (N^{j+1} / ((1-q)^2 A_j^j))^{1/(j+1)}, N = A_{j-1}/A_j.
inline DecompositionConstants decomposition_constants(const DyadicFamily& fam, double threshold = 100.0) {
  if (!(threshold > 3.0)) throw DomainError("threshold must exceed 3");
  DecompositionConstants k;
  k.threshold = threshold;
  const double keep = 1.0 - 3.0 / threshold;
  const int L = fam.levels();
  k.single.push_back(threshold);
  k.tuple.push_back(1.0 / (keep * fam.A(1)));
  for (int j = 2; j <= L; ++j) {
    const double n = fam.A(j - 1) / fam.A(j);
    k.single.push_back(threshold * k.tuple.back());
    const double grow = std::pow(std::pow(n, j + 1) / (keep * keep * std::pow(fam.A(j), j)), 1.0 / (j + 1));
    k.tuple.push_back(k.tuple.back() * grow);
  }
  for (int i = 1; i <= L; ++i) k.single_structural.push_back(std::pow(fam.A(i - 1), -2.0 * (i - 1)));
  k.tuple_structural = std::pow(fam.A(L), -2.0 * L);
  return k;
}

/// Outcome of one split: a single interval or a separated tuple.
struct Split {
  bool single = true;
  int level = 1;
  std::vector<DyadicInterval> intervals;
  double value = 0.0;     // |T f_I| for single, (prod |T f_I|)^{1/size} for tuples
  double constant = 0.0;  // bound is constant * value
};

namespace detail {

// argmax with ties to the lowest index (lowest left endpoint).
inline std::int64_t argmax_lowest(const std::vector<double>& v, std::int64_t begin, std::int64_t end) {
  std::int64_t best = begin;
  for (std::int64_t k = begin + 1; k < end; ++k)
    if (v[static_cast<std::size_t>(k)] > v[static_cast<std::size_t>(best)]) best = k;
  return best;
}

inline double geometric_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    if (x <= 0.0) return 0.0;
    s += std::log(x);
  }
  return std::exp(s / static_cast<double>(v.size()));
}

}  // namespace detail

/// Level-1 dichotomy. `mod` holds |T f_I(x)| over level 1, `V` = |T f(x)|.
inline Split base_split(const std::vector<double>& mod, double V, const DyadicFamily& fam,
                        const DecompositionConstants& k) {
  const auto n = static_cast<std::int64_t>(mod.size());
  if (n != fam.count(1)) throw DomainError("level-1 value count differs from the family");
  const std::int64_t star = detail::argmax_lowest(mod, 0, n);
  Split s;
  s.level = 1;
  const double vstar = mod[static_cast<std::size_t>(star)];
  if (V <= k.threshold * vstar || n < 3) {
    s.intervals = {fam.interval(1, star)};
    s.value = vstar;
    s.constant = k.single[0];
    return s;
  }
  // Far intervals sit at distance >= A_1: index gap at least 2.
  std::int64_t far = -1;
  for (std::int64_t j = 0; j < n; ++j)
    if (std::abs(j - star) >= 2 && (far < 0 || mod[static_cast<std::size_t>(j)] > mod[static_cast<std::size_t>(far)]))
      far = j;
  s.single = false;
  s.intervals = {fam.interval(1, std::min(star, far)), fam.interval(1, std::max(star, far))};
  s.value = std::sqrt(vstar * mod[static_cast<std::size_t>(far)]);
  s.constant = k.tuple[0];
  return s;
}

/// |T f_I(x)| for the level-i interval with index k.
using ModulusFn = std::function<double(int, std::int64_t)>;

/// Step from a separated j-tuple at level j-1 to level j.
inline Split inductive_split(int j, const Split& parent, const ModulusFn& mod, const DyadicFamily& fam,
                             const DecompositionConstants& k) {
  if (j < 2 || j > fam.levels()) throw DomainError("inductive level out of range");
  if (parent.single || static_cast<int>(parent.intervals.size()) != j || parent.level != j - 1)
    throw PreconditionError("inductive split needs a " + std::to_string(j) + "-tuple at level " +
                            std::to_string(j - 1));
  if (!dyadic_separated(parent.intervals, fam.exponent(j - 1)))
    throw PreconditionError("input tuple is not separated at A_" + std::to_string(j - 1));
  const std::int64_t n = std::int64_t{1} << (fam.exponent(j) - fam.exponent(j - 1));
  struct Parent {
    std::int64_t first = 0, star = 0, far = -1;
    double v = 0.0, vstar = 0.0;
  };
  std::vector<Parent> ps;
  double M = 0.0;
  for (const auto& P : parent.intervals) {
    Parent p;
    p.first = P.index * n;
    p.v = mod(j - 1, P.index);
    std::vector<double> cv(static_cast<std::size_t>(n));
    for (std::int64_t c = 0; c < n; ++c) cv[static_cast<std::size_t>(c)] = mod(j, p.first + c);
    p.star = detail::argmax_lowest(cv, 0, n);
    p.vstar = cv[static_cast<std::size_t>(p.star)];
    for (std::int64_t c = 0; c < n; ++c)
      if (std::abs(c - p.star) >= 2 &&
          (p.far < 0 || cv[static_cast<std::size_t>(c)] > cv[static_cast<std::size_t>(p.far)]))
        p.far = c;
    M = std::max(M, p.v);
    ps.push_back(p);
  }
  Split s;
  s.level = j;
  auto single_at = [&](const Parent& p) {
    s.single = true;
    s.intervals = {fam.interval(j, p.first + p.star)};
    s.value = p.vstar;
    s.constant = k.single[static_cast<std::size_t>(j - 1)];
    return s;
  };
  // Some factor is small against the largest: the largest parent's best child dominates.
  const double small = std::pow(fam.A(j), j) * M;
  if (std::any_of(ps.begin(), ps.end(), [&](const Parent& p) { return p.v <= small; })) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ps.size(); ++i)
      if (ps[i].v > ps[best].v) best = i;
    return single_at(ps[best]);
  }
  // Every parent is dominated by its best child: the best child overall dominates.
  std::size_t spread = ps.size();
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i].far >= 0 && ps[i].v > k.threshold * ps[i].vstar) {
      spread = i;
      break;
    }
  if (spread == ps.size()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ps.size(); ++i)
      if (ps[i].vstar > ps[best].vstar) best = i;
    return single_at(ps[best]);
  }
  // Spread parent: its best and best far child join the other parents' best children.
  s.single = false;
  std::vector<double> vals;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    s.intervals.push_back(fam.interval(j, ps[i].first + ps[i].star));
    vals.push_back(ps[i].vstar);
    if (i == spread) {
      s.intervals.push_back(fam.interval(j, ps[i].first + ps[i].far));
      vals.push_back(mod(j, ps[i].first + ps[i].far));
    }
  }
  std::vector<std::size_t> order(s.intervals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.intervals[a].index < s.intervals[b].index; });
  std::vector<DyadicInterval> sorted;
  for (std::size_t i : order) sorted.push_back(s.intervals[i]);
  s.intervals = std::move(sorted);
  s.value = detail::geometric_mean(vals);
  s.constant = k.tuple[static_cast<std::size_t>(j - 1)];
  return s;
}

struct Certificate {
  std::size_t target = 0;
  std::string provenance;
  double lhs = 0.0;  // |T f(x)|
  Split split;
  double rhs = 0.0;
  double slack = std::numeric_limits<double>::infinity();
  bool vacuous = false;
  bool separated = true;

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "target=" << target << " branch=" << (split.single ? "single" : "multi") << " level=" << split.level
       << " intervals=";
    for (std::size_t i = 0; i < split.intervals.size(); ++i) os << (i ? ";" : "") << split.intervals[i].str();
    os << " lhs=" << lhs << " value=" << split.value << " constant=" << split.constant << " rhs=" << rhs
       << " slack=" << (vacuous ? std::string("vacuous") : std::to_string(slack));
    return os.str();
  }
};

/// Absolute slack allowed in the certificate inequality; matches the
/// telescoping tolerance of the piece values.
inline constexpr double kCertificateTolerance = 1e-9;

inline ModulusFn table_modulus(const IntervalTable& tab, std::size_t x) {
  return [&tab, x](int level, std::int64_t k) { return tab.modulus(level, k, x); };
}

inline Certificate decompose(const IntervalTable& tab, std::size_t x, const DyadicFamily& fam,
                             const DecompositionConstants& k) {
  if (tab.exponents != fam.exponents()) throw PreconditionError("table was built for a different family");
  if (x >= tab.targets) throw DomainError("target index out of range");
  Certificate c;
  c.target = x;
  c.provenance = tab.provenance;
  c.lhs = std::abs(tab.total[x]);
  const ModulusFn mod = table_modulus(tab, x);
  std::vector<double> level1(static_cast<std::size_t>(fam.count(1)));
  for (std::int64_t i = 0; i < fam.count(1); ++i) level1[static_cast<std::size_t>(i)] = mod(1, i);
  Split s = base_split(level1, c.lhs, fam, k);
  for (int j = 2; j <= fam.levels() && !s.single; ++j) s = inductive_split(j, s, mod, fam, k);
  c.split = s;
  c.rhs = s.constant * s.value;
  c.separated = s.single || dyadic_separated(s.intervals, fam.exponent(s.level));
  c.vacuous = c.lhs == 0.0;
  c.slack = c.vacuous ? std::numeric_limits<double>::infinity() : c.rhs / c.lhs;
  return c;
}

/// Decompose every target of the table; returns certificates in target order.
inline std::vector<Certificate> decompose_all(const IntervalTable& tab, const DyadicFamily& fam,
                                              const DecompositionConstants& k) {
  std::vector<Certificate> out;
  for (std::size_t x = 0; x < tab.targets; ++x) out.push_back(decompose(tab, x, fam, k));
  return out;
}

struct Verification {
  bool ok = false;
  bool vacuous = false;
  double slack = std::numeric_limits<double>::infinity();
};

/// Recomputes both sides from the table with the supplied constants.
inline Verification verify_certificate(const Certificate& c, const IntervalTable& tab, const DyadicFamily& fam,
                                       const DecompositionConstants& k) {
  if (c.provenance != tab.provenance) throw PreconditionError("certificate and table provenance differ");
  if (tab.exponents != fam.exponents()) throw PreconditionError("table was built for a different family");
  const Split& s = c.split;
  if (s.level < 1 || s.level > fam.levels() || s.intervals.empty())
    throw PreconditionError("certificate branch is malformed");
  const double lhs = std::abs(tab.total[c.target]);
  std::vector<double> vals;
  for (const auto& I : s.intervals) {
    if (I.exponent != fam.exponent(s.level) || I.index < 0 || I.index >= fam.count(s.level))
      throw PreconditionError("certificate interval " + I.str() + " is not in level " + std::to_string(s.level));
    vals.push_back(tab.modulus(s.level, I.index, c.target));
  }
  const bool full = static_cast<int>(s.intervals.size()) == fam.levels() + 1 && s.level == fam.levels();
  if (!s.single && !full) throw PreconditionError("multi branch must be a d-tuple at the deepest level");
  const double constant = s.single ? k.single[static_cast<std::size_t>(s.level - 1)]
                                   : k.tuple[static_cast<std::size_t>(s.level - 1)];
  const double rhs = constant * (s.single ? vals.front() : detail::geometric_mean(vals));
  Verification v;
  v.vacuous = lhs == 0.0;
  v.slack = v.vacuous ? std::numeric_limits<double>::infinity() : rhs / lhs;
  const bool sep = s.single || dyadic_separated(s.intervals, fam.exponent(s.level));
  v.ok = sep && lhs <= rhs + kCertificateTolerance;
  return v;
}

}  // namespace curvelab
