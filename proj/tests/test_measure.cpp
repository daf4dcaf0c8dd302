// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "curvelab/measure.hpp"
#include "curvelab/quadrature.hpp"
#include "test_support.hpp"

using namespace curvelab;
using testsupport::uniform;

TEST(Lebesgue, MassAndAudit) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 100);
  EXPECT_EQ(mu.size(), 10000u);
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
  const auto rep = regularity_audit(mu, 1);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.c_est, std::numbers::pi, 0.1 * std::numbers::pi);
  EXPECT_NEAR(rep.exponent_fit, 2.0, 0.1);
  EXPECT_TRUE(rep.exponent_consistent);
}

TEST(Lebesgue, MislabeledExponentsAreDetected) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 100);
  const auto low = regularity_audit(mu.with_claim(1.5, mu.constant()), 1);
  EXPECT_FALSE(low.exponent_consistent);
  const auto high = regularity_audit(mu.with_claim(2.0, mu.constant()).with_claim(2.0, mu.constant()), 1);
  EXPECT_TRUE(high.pass);
  // alpha = 2.5 cannot be claimed in the plane; in R^3 a plane slab
  // claimed at 3 blows up at small radii.
  const auto slab = make_appendix_a(3, 2.0, 1, 0.5, 64);
  EXPECT_FALSE(regularity_audit(slab.with_claim(2.5, slab.constant()), 1).pass);
  const auto cube = make_lebesgue(3, 0.0, 1.0, 40);
  EXPECT_FALSE(regularity_audit(cube.with_claim(3.0, cube.constant()).with_claim(2.5, 0.5), 1).exponent_consistent);
}

TEST(Lebesgue, ResolutionGuards) {
  EXPECT_THROW(make_lebesgue(2, 0.0, 1.0, 1), DomainError);
  EXPECT_THROW(make_lebesgue(3, 0.0, 1.0, 400), DomainError);
}

TEST(Audit, ShrinkingClaimFlipsVerdict) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 64);
  const auto rep = regularity_audit(mu, 3);
  ASSERT_TRUE(rep.pass);
  const double c = rep.c_est / kAuditSlack;
  EXPECT_TRUE(regularity_audit(mu.with_claim(2.0, c * 1.001), 3).pass);
  EXPECT_FALSE(regularity_audit(mu.with_claim(2.0, c * 0.999), 3).pass);
}

TEST(Audit, PointCloudAndGridAgree) {
  const auto g = make_appendix_a(2, 1.5, 0, 1.0, 64);
  const auto p = DiscreteMeasure::from_points(2, g.coordinates(), g.weights(), g.alpha(), g.constant(), g.spacing());
  const auto rg = regularity_audit(g, 9), rp = regularity_audit(p, 9);
  EXPECT_NEAR(rg.c_est, rp.c_est, 1e-12 * rg.c_est);
  for (std::size_t k = 0; k < rg.sup_mass.size(); ++k) EXPECT_NEAR(rg.sup_mass[k], rp.sup_mass[k], 1e-12);
}

TEST(AppendixA, LineMeasure) {
  const auto mu = make_appendix_a(2, 1.0, 1, 1.0, 1000);
  const double origin[2] = {0.0, 0.0};
  for (double r : {0.1, 0.25, 0.5}) EXPECT_NEAR(ball_masses(mu, origin, {r})[0], 2 * r, 2 * mu.spacing());
  EXPECT_TRUE(regularity_audit(mu).pass);
}

TEST(AppendixA, SingularDensity) {
  const auto mu = make_appendix_a(2, 1.5, 0, 1.0, 512);
  // int_{-1}^{1} |x|^{-1/2} dx = 4, times the width 2.
  EXPECT_NEAR(mu.total_mass(), 8.0, 1e-12);
  const auto rep = regularity_audit(mu, 2);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.exponent_fit, 1.5, 0.05);
}

TEST(AppendixA, PlaneSliceIsLebesgue) {
  const auto mu = make_appendix_a(3, 2.0, 1, 1.0, 50);
  const auto& w = mu.grid().weights[1];
  for (double v : w) EXPECT_NEAR(v, 2.0 / 50, 1e-15);
  for (double v : mu.grid().axes[0]) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(regularity_audit(mu).pass);
}

TEST(AppendixA, InconsistentBracket) {
  EXPECT_THROW(make_appendix_a(2, 1.5, 1, 1.0, 10), DomainError);
  EXPECT_THROW(make_appendix_a(3, 1.0, 0, 1.0, 10), DomainError);
}

TEST(Cantor, ExponentsAndAudit) {
  const auto quarter = make_cantor(1, 0.25, 10);
  EXPECT_DOUBLE_EQ(quarter.alpha(), 0.5);
  EXPECT_NEAR(quarter.total_mass(), 1.0, 1e-12);
  auto rep = regularity_audit(quarter);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.exponent_fit, 0.5, 0.1);
  const auto third = make_cantor(1, 1.0 / 3, 10);
  EXPECT_NEAR(third.alpha(), 0.6309297535714574, 1e-12);
  rep = regularity_audit(third);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.exponent_fit, third.alpha(), 0.1);
  EXPECT_TRUE(regularity_audit(make_cantor(2, 0.3, 6, 3)).pass);
}

TEST(Cantor, DepthZeroIsSingleAtom) {
  const auto mu = make_cantor(1, 0.25, 0);
  EXPECT_EQ(mu.size(), 1u);
  EXPECT_TRUE(regularity_audit(mu).pass);
  EXPECT_THROW(make_cantor(1, 0.5, 3), DomainError);
  EXPECT_THROW(make_cantor(3, 0.25, 9), DomainError);
}

namespace {

// Tensor-product bump with random centers and widths.
struct Bump {
  std::vector<double> c, w;
  double operator()(const double* x) const {
    double v = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double u = (x[k] - c[k]) / w[k];
      v *= std::exp(-u * u);
    }
    return v;
  }
};

double integrate(const DiscreteMeasure& mu, const Bump& f) {
  double s = 0.0;
  std::vector<double> x(static_cast<std::size_t>(mu.dimension()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu.atom(i, x.data());
    s += mu.weight(i) * f(x.data());
  }
  return s;
}

}  // namespace

TEST(Pushforward, DefiningIdentity) {
  std::mt19937_64 rng(7);
  const auto mu = make_appendix_a(2, 1.5, 0, 1.0, 40);
  Mat a(2, 2);
  a << 1.0, 0.3, -0.2, 0.9;
  for (const PushforwardSpec& s : {PushforwardSpec(ExponentTuple({1, 2}), 0.5, a),
                                   PushforwardSpec(ExponentTuple({1, 2}), -0.25),
                                   PushforwardSpec(ExponentTuple({2, 3}), 0.7)}) {
    const auto img = pushforward(mu, s);
    const Mat t = s.map();
    for (int trial = 0; trial < 100; ++trial) {
      Bump f{{uniform(rng, -1, 1), uniform(rng, -1, 1)}, {uniform(rng, 0.05, 1), uniform(rng, 0.05, 1)}};
      double direct = 0.0;
      std::vector<double> x(2);
      for (std::size_t i = 0; i < mu.size(); ++i) {
        mu.atom(i, x.data());
        const Vec y = t * Eigen::Map<const Vec>(x.data(), 2);
        direct += mu.weight(i) * f(y.data());
      }
      EXPECT_NEAR(integrate(img, f), direct, 1e-13 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Pushforward, Semigroup) {
  const auto mu = make_lebesgue(2, -1.0, 1.0, 20);
  const ExponentTuple a({1, 2});
  const auto twice = pushforward(pushforward(mu, PushforwardSpec(a, 0.5)), PushforwardSpec(a, 0.3));
  const auto once = pushforward(mu, PushforwardSpec(a, 0.15));
  ASSERT_EQ(twice.size(), once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    const auto x = twice.atom(i), y = once.atom(i);
    EXPECT_NEAR(x[0], y[0], 1e-15);
    EXPECT_NEAR(x[1], y[1], 1e-15);
    EXPECT_EQ(twice.weight(i), once.weight(i));
  }
}

TEST(Pushforward, IdentityLeavesMeasureUnchanged) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 30);
  const auto img = pushforward(mu, PushforwardSpec(ExponentTuple({1, 2}), 1.0));
  EXPECT_EQ(img.coordinates(), mu.coordinates());
  EXPECT_EQ(img.weights(), mu.weights());
  const auto rep = rescale_bound_check(mu, PushforwardSpec(ExponentTuple({1, 2}), 1.0));
  EXPECT_EQ(rep.observed_constant, regularity_audit(mu).c_est);
}

TEST(Pushforward, ExponentBookkeeping) {
  EXPECT_DOUBLE_EQ(rescale_exponent(2, 2.0, ExponentTuple({1, 2})), -3.0);
  EXPECT_DOUBLE_EQ(rescale_exponent(2, 1.0, ExponentTuple({1, 2})), -2.0);
  for (double h : {1.0, 0.5, 0.3, 0.01})
    for (double alpha : {0.5, 1.0, 1.5, 2.0})
      EXPECT_LE(covering_constant(2, alpha, ExponentTuple({1, 2}), h), 9.0 * std::pow(std::sqrt(2.0) / 2, alpha) + 1e-12);
}

TEST(Pushforward, LebesgueBallMassScalesAsHMinusThree) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 1024);
  const ExponentTuple a({1, 2});
  const double base = rescale_bound_check(mu, PushforwardSpec(a, 1.0), 64).observed_constant;
  for (double h : {0.5, 0.25}) {
    const auto rep = rescale_bound_check(mu, PushforwardSpec(a, h), 64);
    EXPECT_LE(rep.worst_ratio, 1.0);
    EXPECT_NEAR(rep.observed_constant / base / std::pow(h, -3.0), 1.0, 0.05);
  }
}

TEST(Pushforward, SingularLineImagePasses) {
  const auto mu = make_appendix_a(2, 1.0, 1, 1.0, 2000);
  const ExponentTuple a({1, 2});
  const double base = rescale_bound_check(mu, PushforwardSpec(a, 1.0), 64).observed_constant;
  const auto rep = rescale_bound_check(mu, PushforwardSpec(a, 0.5), 64);
  EXPECT_EQ(rep.exponent, -2.0);
  EXPECT_TRUE(rep.audit.pass);
  EXPECT_LE(rep.worst_ratio, 1.0);
  EXPECT_NEAR(rep.observed_constant / base / 4.0, 1.0, 0.05);
}

TEST(Mollifier, ProfileConstantMatchesQuadrature) {
  for (int d = 1; d <= 3; ++d) {
    const MollifierProfile phi(d);
    for (double alpha : {0.5, 1.0, static_cast<double>(d)}) {
      if (alpha > d) continue;
      // alpha int s^{alpha-1} phi(s) ds = int phi(u^{1/alpha}) du, u = v / (1 - v).
      auto f = [&](double v) {
        const double u = v / (1 - v);
        return phi(std::pow(u, 2.0 / alpha)) / ((1 - v) * (1 - v));
      };
      const double q = integrate_adaptive(f, 0.0, 1.0, {1e-9, 60, 20});
      EXPECT_NEAR(phi.tail_constant(alpha), q, 1e-6 * q);
    }
  }
}

TEST(Mollifier, LebesgueIsFlatAndBounded) {
  const auto mu = make_lebesgue(2, 0.0, 1.0, 256);
  std::vector<double> lam, val;
  for (int k = 2; k <= 6; ++k) {
    const auto r = mollified_sup(mu, std::ldexp(1.0, k), 0, 64);
    EXPECT_LE(r.value, r.bound);
    lam.push_back(r.lambda);
    val.push_back(r.value);
  }
  EXPECT_NEAR(log2_slope(lam, val), 0.0, 0.07);
}

TEST(Mollifier, SingleAtomGrowsLikeLambdaToTheD) {
  const auto mu = DiscreteMeasure::from_points(2, {0.3, 0.4}, {1.0}, 2.0, 1.0, 0.0);
  const auto a = mollified_sup(mu, 16.0), b = mollified_sup(mu, 64.0);
  EXPECT_NEAR(b.value / a.value, 16.0, 1e-12);
}
