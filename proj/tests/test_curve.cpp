// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curvelab/curve.hpp"
#include "test_support.hpp"

using namespace curvelab;
using testsupport::uniform;

namespace {

CurveSpec t2_t3() { return CurveSpec({Polynomial({0, 0, 1}), Polynomial({0, 0, 0, 1})}, 0, "t2t3"); }

// Naive power-sum evaluation, independent of Horner.
double naive_eval(const std::vector<double>& c, double t) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::pow(t, static_cast<double>(k));
  return s;
}

}  // namespace

TEST(Derivatives, ModelCurveAtZeroGivesUnitVectors) {
  const auto g = CurveSpec::model(3);
  const auto v = eval_derivatives(g, 0.0, 3);
  for (int k = 1; k <= 3; ++k)
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(v[static_cast<std::size_t>(k)][i], i == k - 1 ? 1.0 : 0.0);
}

TEST(Derivatives, MonomialCurveAtOne) {
  const auto v = eval_derivatives(t2_t3(), 1.0, 3);
  EXPECT_DOUBLE_EQ(v[1][0], 2.0);
  EXPECT_DOUBLE_EQ(v[1][1], 3.0);
  EXPECT_DOUBLE_EQ(v[2][0], 2.0);
  EXPECT_DOUBLE_EQ(v[2][1], 6.0);
  EXPECT_DOUBLE_EQ(v[3][0], 0.0);
  EXPECT_DOUBLE_EQ(v[3][1], 6.0);
}

TEST(Derivatives, MatchCentralDifferences) {
  std::mt19937_64 rng(11);
  std::vector<std::vector<double>> coeffs(3, std::vector<double>(6));
  std::vector<Polynomial> comps;
  for (auto& c : coeffs) {
    for (double& v : c) v = uniform(rng, -2.0, 2.0);
    comps.emplace_back(c);
  }
  const CurveSpec g(comps);
  const double t = 0.37, h = 1e-4;
  const Vec d1 = g.derivative(t, 1), d2 = g.derivative(t, 2);
  for (int i = 0; i < 3; ++i) {
    const auto& c = coeffs[static_cast<std::size_t>(i)];
    const double fd1 = (naive_eval(c, t + h) - naive_eval(c, t - h)) / (2 * h);
    const double fd2 = (naive_eval(c, t + h) - 2 * naive_eval(c, t) + naive_eval(c, t - h)) / (h * h);
    EXPECT_NEAR(fd1, d1[i], 1e-6 * std::max(1.0, std::abs(d1[i])));
    EXPECT_NEAR(fd2, d2[i], 1e-6 * std::max(1.0, std::abs(d2[i])) * 100);  // FD2 roundoff ~ eps/h^2
    EXPECT_NEAR(naive_eval(c, t), g(t)[i], 1e-13);
  }
}

TEST(Derivatives, OrderAboveBudgetIsCapabilityError) {
  const auto g = CurveSpec::model(2);
  EXPECT_THROW(eval_derivatives(g, 0.5, g.order_bound() + 1), CapabilityError);
  EXPECT_NO_THROW(eval_derivatives(g, 0.5, g.order_bound()));
}

TEST(Torsion, ModelCurveIsOne) {
  for (int d = 2; d <= 6; ++d) {
    const auto g = CurveSpec::model(d);
    for (double t : {0.0, 0.1, 0.5, 0.77, 1.0}) EXPECT_NEAR(torsion(g, t), 1.0, 1e-12) << d << " " << t;
  }
}

TEST(Torsion, CubicPlaneCurveIsT) {
  const CurveSpec g({Polynomial({0, 1}), Polynomial({0, 0, 0, 1.0 / 6})});
  for (double t : {0.0, 0.25, 0.6, 1.0}) EXPECT_NEAR(torsion(g, t), t, 1e-15);
}

TEST(Torsion, MonomialModelMatchesLeadingMinorProduct) {
  // det of (a_i)_j / a_i! gives the constant c_a for the model of tuple a.
  for (const auto& a : {ExponentTuple({2, 3}), ExponentTuple({1, 3}), ExponentTuple({1, 2, 4}), ExponentTuple({2, 4, 5})}) {
    const int d = a.size();
    Mat phi0(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 1; j <= d; ++j) phi0(i, j - 1) = falling_factorial(a[i], j) / factorial(a[i]);
    const double ca = phi0.determinant();
    const auto g = CurveSpec::model(a);
    for (double t : {0.1, 0.5, 0.9})
      EXPECT_NEAR(torsion(g, t), ca * std::pow(t, a.torsion_order()), 1e-12) << a.str();
  }
}

TEST(Minor, Examples) {
  EXPECT_DOUBLE_EQ(minor_determinant(CurveSpec::model(3), {0}, 0.4), 1.0);
  const auto g = CurveSpec::model(ExponentTuple({1, 3}));
  for (double t : {0.2, 0.9}) EXPECT_NEAR(minor_determinant(g, {1}, t), t * t / 2, 1e-15);
}

TEST(Minor, SignConstantOnPerturbedClass) {
  std::mt19937_64 rng(5);
  const ExponentTuple a({1, 2, 4});
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testsupport::perturbed_monomial_curve(rng, a, 0.01);
    for (const std::vector<int>& rows : {std::vector<int>{0}, {0, 1}, {1, 2}, {0, 2}, {0, 1, 2}}) {
      const double s0 = minor_determinant(g, rows, 0.5);
      for (int k = 1; k <= 200; ++k) {
        const double v = minor_determinant(g, rows, k / 200.0);
        EXPECT_GT(v * s0, 0.0);
      }
    }
  }
}

TEST(Beta, Examples) {
  for (int d = 2; d <= 6; ++d) {
    EXPECT_EQ(beta_alpha(d, d), (d * d + d) / 2.0);
    EXPECT_EQ(beta_alpha(1.0, d), d);
  }
  EXPECT_DOUBLE_EQ(beta_alpha(2.5, 3), 5.5);
  EXPECT_THROW(beta_alpha(0.0, 3), DomainError);
  EXPECT_THROW(beta_alpha(3.5, 3), DomainError);
}

TEST(Beta, ContinuousAndNondecreasing) {
  for (int d = 2; d <= 6; ++d) {
    for (int k = 1; k < d; ++k) {
      EXPECT_NEAR(beta_alpha(k, d), beta_alpha(k + 1e-13, d), 1e-12);
    }
    double prev = 0.0;
    for (int s = 1; s <= 1000; ++s) {
      const double v = beta_alpha(d * s / 1000.0, d);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Sigma, Examples) {
  EXPECT_DOUBLE_EQ(sigma_exponent(ExponentTuple::standard(4), 2.5), 1.0);
  EXPECT_NEAR(sigma_exponent(ExponentTuple({2, 3}), 2.0), 5.0 / 3, 1e-15);
  EXPECT_NEAR(sigma_exponent(ExponentTuple({1, 2, 4}), 3.0), 7.0 / 6, 1e-15);
}

TEST(Weight, Examples) {
  for (double a : {0.5, 1.0, 2.0}) EXPECT_NEAR(affine_weight(CurveSpec::model(2), a, 0.3), 1.0, 1e-14);
  const CurveSpec g({Polynomial({0, 1}), Polynomial({0, 0, 0, 1.0 / 6})});
  for (double t : {0.1, 0.5}) EXPECT_NEAR(affine_weight(g, 2.0, t), std::cbrt(t), 1e-14);
  const ExponentTuple a({2, 3});
  const auto m = CurveSpec::model(a);
  // model torsion for (2,3) is t^2/2
  for (double t : {0.2, 0.7}) {
    const double expected = std::pow(0.5, 1.0 / 3) * std::pow(t, sigma_exponent(a, 2.0) - 1.0);
    EXPECT_NEAR(affine_weight(m, 2.0, t), expected, 1e-14);
  }
}

TEST(Frame, Examples) {
  EXPECT_TRUE(frame_matrix(CurveSpec::model(3), 0.0, ExponentTuple::standard(3)).m.isIdentity(0.0));
  const auto f = frame_matrix(t2_t3(), 0.0, ExponentTuple({2, 3}));
  EXPECT_DOUBLE_EQ(f.m(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(f.m(1, 1), 6.0);
  EXPECT_DOUBLE_EQ(f.m(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(f.m(1, 0), 0.0);
  EXPECT_NEAR(frame_matrix(CurveSpec::model(3), 0.5, ExponentTuple::standard(3)).det(), 1.0, 1e-14);
}

TEST(Normalize, ModelIsFixedPoint) {
  for (int d = 2; d <= 4; ++d) {
    const auto g = CurveSpec::model(d);
    for (double tau : {0.0, 0.3}) {
      for (double h : {1.0 / 2, 0.37, 1.0 / 16}) {
        if (tau + h > 1.0) continue;
        const auto n = normalize_curve(g, tau, h, ExponentTuple::standard(d));
        EXPECT_LT(class_distance(n).epsilon, 1e-12);
      }
    }
    const auto n = normalize_curve(g, 0.0, 0.25, ExponentTuple::standard(d));
    EXPECT_EQ(class_distance(n).epsilon, 0.0);
  }
}

TEST(Normalize, PhaseIdentity) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 2;
    const auto g = testsupport::perturbed_model(rng, d, 0.2, 5);
    const double tau = uniform(rng, 0.0, 0.5), h = uniform(rng, 0.05, 0.5), t = uniform(rng, 0.0, 1.0);
    const auto a = ExponentTuple::standard(d);
    const auto n = normalize_curve(g, tau, h, a);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = uniform(rng, -5.0, 5.0);
    const double lhs = x.dot(g(h * t + tau) - g(tau));
    const Mat dm = dilation(h, a) * frame_matrix(g, tau, a).m.transpose();
    const double rhs = (dm * x).dot(n(t));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Normalize, ErrorShrinksLinearlyInH) {
  const CurveSpec g({Polynomial({0, 1, 0.3, 0.1}), Polynomial({0, 0.2, 0.5, 0.4, 0.2})});
  std::vector<double> hs, eps;
  for (int k = 1; k <= 8; ++k) {
    hs.push_back(std::ldexp(1.0, -k));
    eps.push_back(class_distance(normalize_curve(g, 0.2, hs.back(), ExponentTuple::standard(2))).epsilon);
  }
  EXPECT_GE(testsupport::log2_slope(hs, eps), 0.95);
}

TEST(Normalize, FiniteTypeVariantShrinksLinearly) {
  const CurveSpec g({Polynomial({0, 0, 1, 0.5}), Polynomial({0, 0, 0, 1, 0.3})}, 0, "g", std::nullopt);
  const ExponentTuple a({2, 3});
  std::vector<double> hs, eps;
  for (int k = 1; k <= 8; ++k) {
    hs.push_back(std::ldexp(1.0, -k));
    eps.push_back(class_distance(normalize_curve(g, 0.0, hs.back(), a), a).epsilon);
  }
  EXPECT_NEAR(testsupport::log2_slope(hs, eps), 1.0, 0.05);
}

TEST(Normalize, SingularFrameCarriesDeterminant) {
  try {
    normalize_curve(t2_t3(), 0.0, 0.5, ExponentTuple::standard(2));
    FAIL();
  } catch (const SingularFrameError& e) {
    EXPECT_EQ(e.det(), 0.0);
  }
}

TEST(ClassDistance, ScalesWithPerturbation) {
  const int d = 3;
  for (double delta : {1e-3, 1e-2}) {
    auto comps = CurveSpec::model(d).components();
    comps[2] = comps[2] + Polynomial::monomial(d + 1, delta);
    const CurveSpec g(comps);
    // sup over k <= d+1 of delta (d+1)!/(d+1-k)! t^{d+1-k} is delta (d+1)!.
    EXPECT_NEAR(class_distance(g).epsilon, kSupSafety * delta * factorial(d + 1), 1e-12);
  }
  EXPECT_EQ(class_distance(CurveSpec::model(4)).epsilon, 0.0);
  EXPECT_EQ(class_distance(CurveSpec::model(ExponentTuple({1, 3})), ExponentTuple({1, 3})).epsilon, 0.0);
}

TEST(FiniteType, Examples) {
  auto info = detect_finite_type(CurveSpec::model(3), 0.0);
  EXPECT_EQ(info.a, ExponentTuple::standard(3));
  EXPECT_TRUE(info.frame.m.isIdentity(0.0));
  info = detect_finite_type(t2_t3(), 0.0);
  EXPECT_EQ(info.a, ExponentTuple({2, 3}));
  EXPECT_NEAR(info.phi_value(0, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(info.phi_value(1, 0.0), 1.0 / 6, 1e-15);
  const CurveSpec g({Polynomial({0, 1}), Polynomial({0, 0, 1}), Polynomial({0, 0, 0, 0, 1})});
  EXPECT_EQ(detect_finite_type(g, 0.0).a, ExponentTuple({1, 2, 4}));
  EXPECT_EQ(detect_finite_type(g, 0.5).a, ExponentTuple::standard(3));
}

TEST(FiniteType, RecoversTupleAndDerivativeIdentity) {
  std::mt19937_64 rng(3);
  for (const auto& a : {ExponentTuple({1, 3}), ExponentTuple({2, 3}), ExponentTuple({1, 2, 4}), ExponentTuple({2, 3, 5})}) {
    const auto info = detect_finite_type(CurveSpec::model(a), 0.0);
    EXPECT_EQ(info.a, a);
    const int d = a.size();
    for (int k = 0; k < d; ++k) {
      const Polynomial q = info.phi[static_cast<std::size_t>(k)].shifted_up(a[k]);
      for (int j = 0; j < d; ++j) EXPECT_NEAR(q.eval(0.0, a[j]), j == k ? 1.0 : 0.0, 1e-8);
    }
    // A non-trivial frame: the tuple is invariant under a linear change.
    const auto p = testsupport::perturbed_monomial_curve(rng, a, 0.05);
    Mat m = Mat::Identity(d, d);
    m(0, d - 1) = 0.7;
    std::vector<Polynomial> comps;
    for (int i = 0; i < d; ++i) {
      Polynomial acc({0.0});
      for (int j = 0; j < d; ++j) acc = acc + m(i, j) * p.component(j);
      comps.push_back(acc);
    }
    const auto info2 = detect_finite_type(CurveSpec(comps), 0.0);
    EXPECT_EQ(info2.a, a);
    for (int k = 0; k < d; ++k) EXPECT_NEAR(info2.phi_value(k, 0.0), 1.0 / factorial(a[k]), 1e-10);
  }
}

TEST(FiniteType, BudgetExhaustedThrows) {
  const CurveSpec flat({Polynomial({0, 1}), Polynomial({0, 0, 1}), Polynomial({0, 1, 1})});
  EXPECT_THROW(detect_finite_type(flat, 0.0), NotFiniteTypeError);
}

TEST(WeightScaling, ModelAndMonomial) {
  std::vector<double> grid;
  for (int k = 0; k <= 64; ++k) grid.push_back(k / 64.0);
  EXPECT_EQ(weight_scaling_check(CurveSpec::model(3), 0.2, 0.5, ExponentTuple::standard(3), 2.0, grid), 0.0);
  EXPECT_LT(weight_scaling_check(t2_t3(), 0.0, 0.25, ExponentTuple({2, 3}), 2.0, grid), 1e-12);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const ExponentTuple a = trial % 2 ? ExponentTuple({1, 3}) : ExponentTuple({1, 2, 4});
    const auto g = testsupport::perturbed_monomial_curve(rng, a, 0.05);
    const double h = uniform(rng, 0.05, 1.0), alpha = uniform(rng, 0.3, a.size());
    EXPECT_LT(weight_scaling_check(g, 0.0, h, a, alpha, grid), 1e-10);
  }
}

TEST(FiniteTorsion, Sandwich) {
  std::mt19937_64 rng(21);
  for (const auto& a : {ExponentTuple({1, 3}), ExponentTuple({2, 3}), ExponentTuple({1, 2, 4})}) {
    const double b = torsion(CurveSpec::model(a), 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto g = testsupport::perturbed_monomial_curve(rng, a, 1e-3);
      for (int k = 1; k <= 100; ++k) {
        const double t = k / 100.0;
        const double v = torsion(g, t), ref = b * std::pow(t, a.torsion_order());
        EXPECT_GE(v, ref / 2);
        EXPECT_LE(v, 2 * ref);
      }
    }
  }
}

TEST(GammaSum, PlaneModel) {
  const auto g = CurveSpec::model(2);
  const auto r = gamma_sum_map(g, {0.2, 0.7});
  EXPECT_NEAR(r.jacobian, 0.5, 1e-15);
  EXPECT_NEAR(r.point[0], 0.9, 1e-15);
  EXPECT_NEAR(r.point[1], (0.04 + 0.49) / 2, 1e-15);
  EXPECT_GE(r.jacobian, 0.5 * 0.5);
  EXPECT_EQ(gamma_sum_map(g, {0.4, 0.4}).jacobian, 0.0);
}

TEST(GammaSum, JacobianPositiveOnOrderedSimplex) {
  std::mt19937_64 rng(99);
  for (int d = 2; d <= 3; ++d) {
    const double eps = 0.5 / (std::ldexp(1.0, d) * factorial(d));
    const auto g = testsupport::perturbed_model(rng, d, eps, d + 2);
    ASSERT_LE(class_distance(g).epsilon, eps * kSupSafety);
    for (int s = 0; s < 10000; ++s) {
      std::vector<double> t(static_cast<std::size_t>(d));
      for (double& v : t) v = uniform(rng, 0.0, 1.0);
      std::sort(t.begin(), t.end());
      if (std::adjacent_find(t.begin(), t.end()) != t.end()) continue;
      EXPECT_GT(gamma_sum_map(g, t).jacobian, 0.0);
    }
  }
}
