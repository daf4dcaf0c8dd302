// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never loosened to make a run pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "curvelab/benchmark.hpp"
#include "curvelab/config.hpp"
#include "curvelab/decomposition.hpp"
#include "curvelab/estimate.hpp"
#include "curvelab/jacobian.hpp"
#include "curvelab/measure.hpp"
#include "curvelab/multilinear.hpp"
#include "test_support.hpp"

#ifndef CURVELAB_CONFIG_DIR
#define CURVELAB_CONFIG_DIR "configs"
#endif

using namespace curvelab;
using testsupport::uniform;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
  template <class T>
  Check& note(const std::string& k, const T& v) {
    detail << " " << k << "=" << v;
    return *this;
  }
};

std::vector<double> dyadic(int lo, int hi) {
  std::vector<double> l;
  for (int k = lo; k <= hi; ++k) l.push_back(std::ldexp(1.0, k));
  return l;
}

std::string pair_tag(double p, double q) { return "_" + format_double(p) + "_" + format_double(q); }

double slope_of(const std::vector<double>& x, const std::vector<double>& y) { return fit_log2(x, y).slope; }

// 1. beta(d) = (d^2 + d) / 2 and continuity at integer alpha.
void beta_formula(Check& c) {
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d) {
    c.require(beta_alpha(d, d) == (d * d + d) / 2.0, "beta(d) for d=" + std::to_string(d));
    for (int k = 1; k < d; ++k) {
      worst = std::max(worst, std::abs(beta_alpha(k + 1e-13, d) - beta_alpha(k, d)));
      worst = std::max(worst, std::abs(beta_alpha(k - 1e-13, d) - beta_alpha(k, d)));
    }
  }
  c.note("max_jump", worst);
  c.require(worst <= 1e-12, "continuity 1e-12");
  // The region classifier uses the same beta.
  c.require(admissible_region(3, 3.0, 0.5).beta == beta_alpha(3.0, 3), "region beta");
}

// 2. Model curve identities.
void model_identities(Check& c) {
  double tors = 0.0, fixed = 0.0, phase = 0.0;
  for (int d = 2; d <= 5; ++d) {
    const auto g = CurveSpec::model(d);
    for (int i = 0; i <= 20; ++i) tors = std::max(tors, std::abs(torsion(g, i / 20.0) - 1.0));
    for (double h : {0.5, 0.25, 1.0 / 16}) {
      const auto n = normalize_curve(g, 0.25, h, ExponentTuple::standard(d));
      fixed = std::max(fixed, class_distance(n).epsilon);
    }
  }
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 2;
    const auto g = testsupport::perturbed_model(rng, d, 0.2, 5);
    const double tau = uniform(rng, 0.0, 0.5), h = uniform(rng, 0.05, 0.5), t = uniform(rng, 0.0, 1.0);
    const auto a = ExponentTuple::standard(d);
    const auto n = normalize_curve(g, tau, h, a);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = uniform(rng, -5.0, 5.0);
    const double lhs = x.dot(g(h * t + tau));
    const Mat dm = dilation(h, a) * frame_matrix(g, tau, a).m.transpose();
    const double rhs = x.dot(g(tau)) + (dm * x).dot(n(t));
    phase = std::max(phase, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  c.note("torsion_err", tors).note("fixed_point_err", fixed).note("phase_err", phase);
  c.require(tors <= 1e-12, "torsion 1e-12");
  c.require(fixed <= 1e-12, "fixed point 1e-12");
  c.require(phase <= 1e-10, "phase identity 1e-10");
}

// 3. Normalization error shrinks linearly in h.
void normalization_convergence(Check& c) {
  const CurveSpec g2({Polynomial({0, 1, 0.3, 0.1}), Polynomial({0, 0.2, 0.5, 0.4, 0.2})});
  const CurveSpec g3({Polynomial({0, 1, 0.1, 0.0, 0.1}), Polynomial({0, 0, 0.5, 0.05, 0.1}),
                      Polynomial({0, 0, 0, 1.0 / 6.0, 0.05})});
  for (const auto* g : {&g2, &g3}) {
    std::vector<double> hs, eps;
    for (int k = 1; k <= 8; ++k) {
      hs.push_back(std::ldexp(1.0, -k));
      eps.push_back(class_distance(normalize_curve(*g, 0.2, hs.back(), ExponentTuple::standard(g->dimension()))).epsilon);
    }
    const double s = slope_of(hs, eps);
    c.note("slope_d" + std::to_string(g->dimension()), s);
    c.require(s >= 0.95, "slope >= 0.95");
  }
}

// 4. Pushforward ball-mass scaling.
void measure_rescaling(Check& c) {
  const ExponentTuple a({1, 2});
  const auto leb = make_lebesgue(2, 0.0, 1.0, 1024);
  const double base = rescale_bound_check(leb, PushforwardSpec(a, 1.0), 64).observed_constant;
  for (double h : {0.5, 0.25}) {
    const auto r = rescale_bound_check(leb, PushforwardSpec(a, h), 64);
    const double rel = r.observed_constant / base / std::pow(h, -3.0);
    c.note("lebesgue_h" + format_double(h), rel);
    c.require(std::abs(rel - 1.0) <= 0.05, "Lebesgue |h|^-3 within 5%");
    c.require(r.worst_ratio <= 1.0, "Lebesgue certified constant");
  }
  const auto sing = make_appendix_a(2, 1.0, 1, 1.0, 2000);
  const double sbase = rescale_bound_check(sing, PushforwardSpec(a, 1.0), 64).observed_constant;
  const auto r = rescale_bound_check(sing, PushforwardSpec(a, 0.5), 64);
  const double rel = r.observed_constant / sbase / std::pow(0.5, r.exponent);
  c.note("singular_exponent", r.exponent).note("singular_rel", rel);
  c.require(std::abs(rel - 1.0) <= 0.05, "singular measure at its exponent within 5%");
  c.require(r.audit.pass && r.worst_ratio <= 1.0, "singular certified constant");
}

// 5. Mollified measure slope d - alpha.
void mollified_bound(Check& c) {
  const auto lambdas = dyadic(4, 10);
  auto run = [&](const std::string& name, const DiscreteMeasure& mu) {
    std::vector<double> v;
    bool bounded = true;
    for (double l : lambdas) {
      const auto r = mollified_sup(mu, l, 1);
      v.push_back(r.value);
      bounded = bounded && r.value <= r.bound;
    }
    const double s = slope_of(lambdas, v), target = mu.dimension() - mu.alpha();
    c.note(name, s).note(name + "_target", target);
    c.require(std::abs(s - target) <= kSlopeTolerance, name + " slope");
    c.require(bounded, name + " below bound");
  };
  run("lebesgue", make_lebesgue(2, 0.0, 0.5, 2048));
  run("singular", make_appendix_a(2, 1.5, 0, 0.125, 2048));
  run("cantor", make_cantor(1, 1.0 / 3.0, 14));
}

// 6. Multilinear L^2 inequality and the Knapp-tuple slope.
void multilinear_plancherel(Check& c) {
  MultilinearOptions o;
  o.box_sum = false;
  Rng rng(606);
  std::mt19937_64 mt(607);
  int held = 0, total = 0;
  double worst = 0.0;
  for (int d : {2, 3}) {
    const double eps = 0.5 * normalization_threshold(d);
    for (int trial = 0; trial < 100; ++trial) {
      const auto g = testsupport::perturbed_model(mt, d, eps, 4);
      const double L = rng.uniform(0.05, 0.8 / d);
      const auto fs = random_separated_functions(rng, d, L);
      const double lambda = std::ldexp(1.0, 1 + static_cast<int>(rng.index(9)));
      const auto r = multilinear_l2(g, fs, lambda, L, o);
      held += r.holds ? 1 : 0;
      ++total;
      if (r.bound > 0.0) worst = std::max(worst, r.lhs / r.bound);
    }
  }
  c.note("held", std::to_string(held) + "/" + std::to_string(total)).note("max_ratio", worst);
  c.require(held == total, "inequality on every configuration");
  for (int d : {2, 3}) {
    MultilinearOptions box;
    box.box_sum = true;
    box.box_scale = d == 2 ? 2560.0 : 160.0;
    const double L = 0.2, w = (1.0 - (d - 1) * L) / d;
    std::vector<TestFunction> fs;
    for (int i = 0; i < d; ++i) fs.push_back(TestFunction::indicator(i * (w + L), i * (w + L) + w));
    std::vector<double> lam = dyadic(4, 9), v;
    for (double l : lam) v.push_back(multilinear_l2(CurveSpec::model(d), fs, l, L, box).box_value);
    const double s = slope_of(lam, v);
    c.note("knapp_slope_d" + std::to_string(d), s);
    c.require(std::abs(s + 0.5 * d) <= 0.1, "Knapp slope -d/2");
  }
}

// 7. Decomposition certificates.
void decomposition_soundness(Check& c) {
  Rng rng(707);
  std::size_t total = 0, verified = 0;
  bool separated = true;
  for (int d : {2, 3}) {
    const auto fam = DyadicFamily::standard(d);
    const auto k = decomposition_constants(fam);
    for (int batch = 0; batch < 10; ++batch) {
      std::vector<double> flat(50 * static_cast<std::size_t>(d));
      for (double& v : flat) v = rng.uniform(-1.0, 1.0);
      const double lambda = std::ldexp(1.0, 3 + static_cast<int>(rng.index(6)));
      const auto f = TestFunction::random_trig_poly(rng.next(), 2 + static_cast<int>(rng.index(8)));
      const auto tab = interval_values(CurveSpec::model(d), f, fam, lambda, TargetSet::points(d, std::move(flat)));
      for (const auto& cert : decompose_all(tab, fam, k)) {
        ++total;
        verified += verify_certificate(cert, tab, fam, k).ok ? 1 : 0;
        separated = separated && cert.separated;
      }
    }
  }
  c.note("verified", std::to_string(verified) + "/" + std::to_string(total));
  c.require(total == 1000 && verified == total, "all certificates verified");
  c.require(separated, "dyadic separation");
  // Two bumps far apart at low frequency: the pair branch is saturated, so
  // halving the constants must be detected.
  const auto c2 = CurveSpec::model(2);
  const DyadicFamily fam({8});
  const auto k = decomposition_constants(fam);
  const auto x = TargetSet::points({Vec::Zero(2)});
  auto t1 = interval_values(c2, TestFunction::bump(0.0, 0.5, 2), fam, 1.0, x);
  const auto t2 = interval_values(c2, TestFunction::bump(0.5, 1.0, 2), fam, 1.0, x);
  t1.total[0] += t2.total[0];
  for (std::size_t i = 0; i < t1.values[0].size(); ++i) t1.values[0][i][0] += t2.values[0][i][0];
  const auto cert = decompose(t1, 0, fam, k);
  auto half = k;
  for (double& v : half.single) v *= 0.5;
  for (double& v : half.tuple) v *= 0.5;
  const bool full_ok = verify_certificate(cert, t1, fam, k).ok;
  const bool half_ok = verify_certificate(cert, t1, fam, half).ok;
  c.note("two_bump_slack", cert.slack);
  c.require(full_ok, "two-bump certificate verifies");
  c.require(!half_ok, "halved constant detected");
}

// 8. Family-sup scaling from the bundled Lebesgue config.
void main_scaling(Check& c) {
  const Config cfg = Config::load(std::string(CURVELAB_CONFIG_DIR) + "/d2_lebesgue.cfg");
  const auto curve = curve_from_config(cfg);
  const auto mu = measure_from_config(cfg);
  ScalingOptions so;
  so.radius = cfg.num("window.radius");
  so.spacing = cfg.num("window.spacing");
  so.sensitivity = cfg.flag("window.sensitivity", true);
  FamilyOptions fo;
  fo.knapp_positions = cfg.integer("family.knapp_positions");
  fo.knapp_widths = cfg.integer("family.knapp_widths");
  fo.bump_levels = cfg.integer("family.bump_levels");
  fo.trig_count = cfg.integer("family.trig_count");
  fo.trig_max_degree = cfg.integer("family.trig_max_degree");
  fo.seed = cfg.u64("run.seed");
  const auto fam = standard_family(2, fo);
  const auto lambdas = cfg.nums("lambda.values");
  c.require(lambdas == dyadic(5, 10), "lambda grid 2^5..2^10");
  c.require(mu.kind() == MeasureModel::Kind::Lebesgue && mu.alpha() == 2.0, "Lebesgue alpha=2");
  for (const auto& [p, q] : std::vector<std::pair<double, double>>{{INFINITY, 8.0}, {2.0, 8.0}}) {
    const auto r = scaling_experiment(curve, mu, fam, p, q, lambdas, so);
    const std::string tag = pair_tag(p, q);
    c.note("slope" + tag, r.fit.slope).note("sens" + tag, r.max_sensitivity);
    c.require(r.fit.slope <= -2.0 / q + kSlopeTolerance, "slope" + tag);
    c.require(r.sensitivity_ok, "sensitivity" + tag);
  }
}

// 9. Knapp sharpness for the singular product measure.
void appendix_sharpness(Check& c) {
  const Config cfg = Config::load(std::string(CURVELAB_CONFIG_DIR) + "/appendixA_sharp.cfg");
  const auto curve = curve_from_config(cfg);
  const auto mu = measure_from_config(cfg);
  KnappConfig k;
  k.tau = cfg.num("knapp.tau");
  k.h = cfg.num("knapp.h");
  k.c = cfg.num("knapp.c");
  k.resolution = cfg.integer("knapp.resolution");
  k.lambdas = cfg.nums("lambda.values");
  const auto edge = sharpness_experiment(curve, mu, k, 2.0, 4.0);
  const auto inner = sharpness_experiment(curve, mu, k, 4.0, 8.0);
  c.note("mass_slope", edge.mass_fit.slope).note("mass_target", edge.mass_target);
  c.note("edge_ratio_slope", edge.ratio_fit.slope).note("interior_ratio_slope", inner.ratio_fit.slope);
  c.require(std::abs(edge.mass_fit.slope - edge.mass_target) <= kSlopeTolerance, "mass slope");
  c.require(edge.pair.on_edge() && std::abs(edge.ratio_fit.slope) <= kFlatTolerance, "edge flat");
  c.require(inner.ratio_fit.slope < kDecayThreshold, "interior decays");
  c.require(edge.knapp_ok && inner.knapp_ok, "Knapp lower bound");
  const auto leb = sharpness_experiment(CurveSpec::model(2), MeasureModel::lebesgue(2), k, 2.0, 8.0);
  double exact = 0.0;
  for (const auto& pt : leb.points) exact = std::max(exact, std::abs(pt.mass / pt.mass_closed_form - 1.0));
  c.note("lebesgue_mass_slope", leb.mass_fit.slope).note("closed_form_err", exact);
  c.require(std::abs(leb.mass_fit.slope + 0.5) <= kSlopeTolerance, "Lebesgue mass slope -0.5");
  c.require(exact <= 1e-12, "Lebesgue rectangle mass exact");
}

// 10. Dyadic reduction for the cusp.
void finite_type(Check& c) {
  const CurveSpec cusp({Polynomial({0.0, 0.0, 1.0}), Polynomial({0.0, 0.0, 0.0, 1.0})}, 3, "cusp");
  const auto r = finite_type_pipeline(cusp, 0.0, MeasureModel::lebesgue(2), TestFunction::indicator(0.0, 1.0), 4.0,
                                      8.0, dyadic(5, 10));
  c.note("sigma", r.sigma).note("rate", r.rate).note("target", r.rate_target);
  c.note("max_step_ratio", r.max_step_ratio).note("aggregate_slope", r.aggregate.fit.slope);
  c.require(std::abs(r.sigma - 5.0 / 3.0) <= 1e-12, "sigma 5/3");
  c.require(std::abs(r.rate - 0.625) <= kBlockRateTolerance, "block rate 0.625");
  c.require(r.summable_ok, "summable blocks");
  c.require(r.triangle_ok, "triangle inequality");
  c.require(r.aggregate.fit.slope <= -2.0 / 8.0 + kSlopeTolerance, "aggregate slope");
}

// 11. Jacobian recursion against the direct determinant.
void jacobian_oracle(Check& c) {
  std::mt19937_64 rng(1111);
  auto ordered = [&](int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (double& v : t) v = uniform(rng, 0.02, 1.0);
    std::sort(t.begin(), t.end());
    return t;
  };
  double e2 = 0.0, e3 = 0.0;
  for (const auto& b : {ExponentTuple::standard(2), ExponentTuple({1, 3})})
    for (int trial = 0; trial < 20; ++trial) {
      const auto t = ordered(2);
      const double ref = gamma_sum_map(CurveSpec::model(b), t).jacobian;
      e2 = std::max(e2, std::abs(ik_recursion(CurveSpec::model(b), JacobianProbe(b, t)) - ref) / std::abs(ref));
    }
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = ordered(3);
    const auto b = ExponentTuple::standard(3);
    const double ref = gamma_sum_map(CurveSpec::model(b), t).jacobian;
    e3 = std::max(e3, std::abs(ik_recursion(CurveSpec::model(b), JacobianProbe(b, t)) - ref) / std::abs(ref));
  }
  int held = 0;
  const std::vector<ExponentTuple> tuples{ExponentTuple::standard(2), ExponentTuple({1, 3}), ExponentTuple::standard(3),
                                          ExponentTuple({1, 2, 4})};
  for (int trial = 0; trial < 100; ++trial) {
    const auto& b = tuples[static_cast<std::size_t>(trial) % tuples.size()];
    const auto g = testsupport::perturbed_monomial_curve(rng, b, 1e-3);
    const auto t = ordered(b.size());
    held += gamma_sum_map(g, t).jacobian >= jacobian_lower_bound(b, t) ? 1 : 0;
  }
  c.note("rel_err_n2", e2).note("rel_err_n3", e3).note("lower_bound_held", held);
  c.require(e2 <= 1e-4, "n=2 within 1e-4");
  c.require(e3 <= 1e-2, "n=3 within 1e-2");
  c.require(held == 100, "lower bound on 100 probes");
}

// 12. Worker-count determinism and throughput.
void engine_determinism(Check& c) {
  const auto r = throughput_benchmark({10000}, {4096.0}, {1, 2, 4}, 2, 1212);
  double fastest = INFINITY;
  for (const auto& bc : r.cases) fastest = std::min(fastest, bc.seconds);
  c.note("checksum", hex64(r.cases.front().checksum)).note("seconds", fastest);
  for (const auto& bc : r.cases) c.note("speedup_w" + std::to_string(bc.workers), bc.speedup);
  c.note("hardware_threads", r.hardware_threads);
  c.require(r.checksums_stable, "byte-identical across workers");
  c.require(fastest < 120.0, "batch under 120 s");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> all{
      {1, "beta formula", beta_formula},
      {2, "model curve identities", model_identities},
      {3, "normalization convergence", normalization_convergence},
      {4, "measure rescaling", measure_rescaling},
      {5, "mollified measure bound", mollified_bound},
      {6, "multilinear plancherel", multilinear_plancherel},
      {7, "decomposition soundness", decomposition_soundness},
      {8, "main estimate scaling", main_scaling},
      {9, "singular measure sharpness", appendix_sharpness},
      {10, "finite type pipeline", finite_type},
      {11, "jacobian recursion oracle", jacobian_oracle},
      {12, "engine determinism and throughput", engine_determinism},
  };
  int failed = 0;
  for (const auto& cr : all) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [exception: " << e.what() << "]";
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << cr.id << " (" << cr.name << ")" << c.detail.str()
              << " time=" << std::setprecision(3) << sec << "s" << std::setprecision(6) << std::endl;
    failed += c.ok ? 0 : 1;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
