// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curvelab/decomposition.hpp"
#include "test_support.hpp"

using namespace curvelab;

namespace {

TargetSet random_points(std::mt19937_64& rng, int d, std::size_t n, double r) {
  std::vector<double> flat;
  for (std::size_t i = 0; i < n * static_cast<std::size_t>(d); ++i) flat.push_back(testsupport::uniform(rng, -r, r));
  return TargetSet::points(d, flat);
}

}  // namespace

TEST(Dyadic, FamilyAndExactGaps) {
  const auto fam = DyadicFamily::standard(3);
  EXPECT_EQ(fam.exponents(), (std::vector<int>{4, 8}));
  EXPECT_EQ(fam.count(2), 256);
  EXPECT_EQ(fam.A(0), 1.0);
  EXPECT_THROW(DyadicFamily({3, 3}), DomainError);
  EXPECT_THROW(DyadicFamily({0}), DomainError);
  const DyadicInterval a{2, 0}, b{2, 1}, c{2, 2}, e{4, 9};
  EXPECT_EQ(dyadic_gap(a, b, 2), 0);  // closed intervals touch
  EXPECT_EQ(dyadic_gap(a, c, 2), 1);
  EXPECT_EQ(dyadic_gap(a, e, 4), 5);
  EXPECT_TRUE(dyadic_separated({a, c}, 2));
  EXPECT_FALSE(dyadic_separated({a, b}, 2));
  EXPECT_FALSE(dyadic_separated({a, c}, 1));
}

TEST(IntervalValues, HalvesSumToWhole) {
  const auto c = CurveSpec::model(2);
  const DyadicFamily fam({1});
  std::mt19937_64 rng(1);
  const auto x = random_points(rng, 2, 20, 1.0);
  const auto tab = interval_values(c, TestFunction::indicator(0.0, 1.0), fam, 64.0, x);
  ASSERT_EQ(tab.values[0].size(), 2U);
  for (std::size_t t = 0; t < 20; ++t)
    EXPECT_NEAR(std::abs(tab.values[0][0][t] + tab.values[0][1][t] - tab.total[t]), 0.0, 1e-12);
}

TEST(IntervalValues, OriginGivesPieceIntegrals) {
  const auto c = CurveSpec::model(2);
  const DyadicFamily fam({2});
  const auto f = TestFunction::bump(0.1, 0.9, 2);
  const auto tab = interval_values(c, f, fam, 16.0, TargetSet::points({Vec::Zero(2)}));
  for (std::int64_t k = 0; k < 4; ++k)
    EXPECT_NEAR(tab.values[0][static_cast<std::size_t>(k)][0].real(), f.restricted(k / 4.0, (k + 1) / 4.0).norm(1),
                1e-12);
}

TEST(IntervalValues, TelescopingAtTwoLevels) {
  const auto c = CurveSpec::model(3);
  const DyadicFamily fam({3, 6});
  std::mt19937_64 rng(2);
  const auto x = random_points(rng, 3, 30, 1.0);
  const auto tab = interval_values(c, TestFunction::random_trig_poly(4, 6), fam, 128.0, x);
  for (double r : tab.telescoping_residual) EXPECT_LT(r, 1e-8);
}

TEST(Constants, StructureAndMonotonicity) {
  const auto fam = DyadicFamily::standard(3, 4);
  const auto k = decomposition_constants(fam);
  EXPECT_EQ(k.single_structural[0], 1.0);
  EXPECT_EQ(k.single_structural[1], std::pow(fam.A(1), -2.0));
  EXPECT_EQ(k.tuple_structural, std::pow(fam.A(2), -4.0));
  EXPECT_NEAR(k.tuple[0], 1.0 / (0.97 * fam.A(1)), 1e-9);
  // Explicit constants fit under the structural factors with a bounded multiplier.
  for (int step : {2, 3, 4, 5, 6}) {
    const auto f2 = DyadicFamily::standard(3, step);
    const auto c2 = decomposition_constants(f2);
    EXPECT_LE(c2.tuple.back() / c2.tuple_structural, 2.0);
    for (std::size_t i = 0; i < c2.single.size(); ++i) EXPECT_LE(c2.single[i] / c2.single_structural[i], 200.0);
  }
  // Coarser families cost less.
  double prev = 0.0;
  for (int step : {1, 2, 3, 4, 5}) {
    const double t = decomposition_constants(DyadicFamily::standard(3, step)).total();
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(BaseSplit, Branches) {
  const DyadicFamily fam({4});
  const auto k = decomposition_constants(fam);
  std::vector<double> one(16, 0.0);
  one[5] = 0.7;
  auto s = base_split(one, 0.7, fam, k);
  EXPECT_TRUE(s.single);
  EXPECT_EQ(s.intervals[0].index, 5);
  std::vector<double> zero(16, 0.0);
  s = base_split(zero, 0.0, fam, k);
  EXPECT_TRUE(s.single);
  EXPECT_EQ(s.intervals[0].index, 0);  // ties resolve to the lowest left endpoint
}

TEST(BaseSplit, SpreadMassGivesSeparatedPair) {
  const auto c = CurveSpec::model(2);
  const DyadicFamily fam({8});
  const auto k = decomposition_constants(fam);
  const auto tab = interval_values(c, TestFunction::indicator(0.0, 1.0), fam, 4.0, TargetSet::points({Vec::Zero(2)}));
  const auto cert = decompose(tab, 0, fam, k);
  EXPECT_FALSE(cert.split.single);
  ASSERT_EQ(cert.split.intervals.size(), 2U);
  EXPECT_TRUE(dyadic_separated(cert.split.intervals, 8));
  EXPECT_TRUE(verify_certificate(cert, tab, fam, k).ok);
  EXPECT_LT(cert.slack, 1.05);
  // Halving every constant breaks this saturated case.
  auto half = k;
  for (double& v : half.single) v *= 0.5;
  for (double& v : half.tuple) v *= 0.5;
  EXPECT_FALSE(verify_certificate(cert, tab, fam, half).ok);
}

TEST(InductiveSplit, ConcentratedSpreadAndZero) {
  const DyadicFamily fam({2, 9});
  const auto k = decomposition_constants(fam);
  Split parent;
  parent.single = false;
  parent.level = 1;
  parent.intervals = {fam.interval(1, 0), fam.interval(1, 2)};
  const std::int64_t n = 128;
  // Concentrated: each parent's mass in one child.
  ModulusFn conc = [&](int level, std::int64_t i) {
    if (level == 1) return 1.0;
    return (i == 3 || i == 2 * n + 7) ? 1.0 : 0.0;
  };
  auto s = inductive_split(2, parent, conc, fam, k);
  EXPECT_TRUE(s.single);
  EXPECT_EQ(s.level, 2);
  EXPECT_EQ(s.intervals[0].index, 3);
  // Spread: children uniform, parents far above their best child.
  ModulusFn spread = [&](int level, std::int64_t) { return level == 1 ? 1.0 : 1.0 / n; };
  s = inductive_split(2, parent, spread, fam, k);
  EXPECT_FALSE(s.single);
  ASSERT_EQ(s.intervals.size(), 3U);
  EXPECT_TRUE(dyadic_separated(s.intervals, 9));
  EXPECT_EQ(s.constant, k.tuple[1]);
  // Zero everywhere.
  ModulusFn zero = [](int, std::int64_t) { return 0.0; };
  s = inductive_split(2, parent, zero, fam, k);
  EXPECT_TRUE(s.single);
  // Input not separated at A_1.
  Split bad = parent;
  bad.intervals = {fam.interval(1, 0), fam.interval(1, 1)};
  EXPECT_THROW(inductive_split(2, bad, zero, fam, k), PreconditionError);
}

TEST(Decompose, PlaneReducesToBaseSplit) {
  const auto c = CurveSpec::model(2);
  const DyadicFamily fam({5});
  const auto k = decomposition_constants(fam);
  std::mt19937_64 rng(5);
  const auto x = random_points(rng, 2, 50, 2.0);
  const auto tab = interval_values(c, TestFunction::random_trig_poly(3, 5), fam, 64.0, x);
  for (std::size_t t = 0; t < 50; ++t) {
    const auto cert = decompose(tab, t, fam, k);
    std::vector<double> m(32);
    for (std::int64_t i = 0; i < 32; ++i) m[static_cast<std::size_t>(i)] = tab.modulus(1, i, t);
    const auto s = base_split(m, std::abs(tab.total[t]), fam, k);
    EXPECT_EQ(cert.split.single, s.single);
    EXPECT_EQ(cert.split.intervals, s.intervals);
  }
}

TEST(Decompose, SpaceCurveCertificatesHold) {
  const auto c = CurveSpec::model(3);
  const auto fam = DyadicFamily::standard(3);
  const auto k = decomposition_constants(fam);
  std::mt19937_64 rng(7);
  const auto x = random_points(rng, 3, 500, 1.0);
  const auto tab = interval_values(c, TestFunction::random_trig_poly(11, 8), fam, 128.0, x);
  double tightest = INFINITY;
  for (const auto& cert : decompose_all(tab, fam, k)) {
    const auto v = verify_certificate(cert, tab, fam, k);
    EXPECT_TRUE(v.ok) << cert.to_text();
    EXPECT_TRUE(cert.separated);
    tightest = std::min(tightest, v.slack);
  }
  EXPECT_GE(tightest, 1.0);
}

TEST(Decompose, DeepSupportGivesSingleBranch) {
  const auto c = CurveSpec::model(3);
  const auto fam = DyadicFamily::standard(3);
  const auto k = decomposition_constants(fam);
  const auto f = TestFunction::bump(37.0 / 256.0, 38.0 / 256.0, 2);
  std::mt19937_64 rng(9);
  const auto x = random_points(rng, 3, 40, 1.0);
  const auto tab = interval_values(c, f, fam, 128.0, x);
  for (std::size_t t = 0; t < 40; ++t) {
    const auto cert = decompose(tab, t, fam, k);
    EXPECT_TRUE(cert.split.single);
    EXPECT_NEAR(cert.split.value, cert.lhs, 1e-12);
  }
}

TEST(Verify, ProvenanceAndVacuous) {
  const auto c = CurveSpec::model(2);
  const DyadicFamily fam({3});
  const auto k = decomposition_constants(fam);
  const auto x = TargetSet::points({Vec::Zero(2)});
  const auto zt = interval_values(c, TestFunction::zero(), fam, 8.0, x);
  const auto cert = decompose(zt, 0, fam, k);
  const auto v = verify_certificate(cert, zt, fam, k);
  EXPECT_TRUE(v.ok);
  EXPECT_TRUE(v.vacuous);
  EXPECT_NE(cert.to_text().find("slack=vacuous"), std::string::npos);
  const auto other = interval_values(c, TestFunction::indicator(0.0, 1.0), fam, 8.0, x);
  EXPECT_THROW(verify_certificate(cert, other, fam, k), PreconditionError);
}
