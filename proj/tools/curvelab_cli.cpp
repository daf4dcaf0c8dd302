// SPDX-License-Identifier: Apache-2.0
//
// curvelab: batch front end for the curve, measure, engine, decomposition
// and estimate modules. Exit codes: 0 pass, 1 verdict fail, 2 config
// error, 3 numerical certification failure.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "curvelab/config.hpp"
#include "curvelab/curve.hpp"
#include "curvelab/estimate.hpp"
#include "run_context.hpp"

namespace {

using namespace curvelab;
using cli::Globals;

/// CSV to stdout without --out, else into the output directory.
int emit_table(const Globals& g, const std::string& name, const std::string& hash, const CsvTable& t,
               const cli::Summary& s, bool pass) {
  if (g.out.empty()) {
    std::cout << t.str(hash);
    return pass || g.report_only ? cli::kExitPass : cli::kExitFail;
  }
  cli::RunContext ctx(g, name, hash);
  if (const auto done = ctx.prepare()) return *done;
  ctx.write_csv("results.csv", t);
  return ctx.finish(s, pass);
}

int cmd_torsion(const Globals& g, const std::string& path, double t0, double t1, int n, bool require) {
  const Config cfg = Config::load(path);
  const bool sectioned = cfg.has("curve.kind") || cfg.has("curve.d");
  const CurveSpec c = curve_from_config(cfg, sectioned ? "curve" : "");
  cfg.finish();
  if (n < 1) throw DomainError("t-count must be positive");
  if (!(t1 >= t0)) throw DomainError("t-max must not be below t-min");
  CsvTable t({"t", "torsion"});
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1);
    const double v = torsion(c, s);
    smallest = std::min(smallest, std::abs(v));
    t.row() << s << v;
  }
  cli::Summary s;
  s.add("curve", c.name());
  s.add("samples", n);
  s.add("min_abs_torsion", smallest);
  const bool pass = !require || smallest > 1e-12;
  s.add("nondegenerate_required", require);
  const std::string grid = format_double(t0) + ":" + format_double(t1) + ":" + std::to_string(n);
  return emit_table(g, "torsion", hex64(fnv1a("torsion\n" + cfg.canonical() + grid)), t, s, pass);
}

int cmd_region(const Globals& g, int d, double alpha, double step) {
  const RegionTable r = admissible_region(d, alpha, step);
  CsvTable t({"inv_p", "inv_q", "region", "edge"});
  for (const auto& n : r.nodes) t.row() << n.inv_p << n.inv_q << to_string(n.region) << n.edge;
  cli::Summary s;
  s.add("d", d);
  s.add("alpha", alpha);
  s.add("beta", r.beta);
  s.add("step", step);
  s.add("admissible", r.count(Region::Admissible));
  s.add("necessary_only", r.count(Region::NecessaryOnly));
  s.add("excluded", r.count(Region::Excluded));
  const std::string key = std::to_string(d) + ":" + format_double(alpha) + ":" + format_double(step);
  return emit_table(g, "region", hex64(fnv1a("region\n" + key)), t, s, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvelab: Fourier extension experiments for curves and fractal measures"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized experiments (overrides run.seed)");
  app.add_option("--workers", g.workers, "Worker threads; 0 uses every hardware thread");
  app.add_option("--out", g.out, "Output directory (default curvelab-<command>)");
  app.add_flag("--force", g.force, "Overwrite a non-empty output directory");
  app.add_flag("--report-only", g.report_only, "Exit 0 on a failing verdict");
  app.add_flag("--resume", g.resume, "Reuse a completed run with the same config hash");

  std::string curve_file;
  double t0 = 0.0, t1 = 1.0;
  int tn = 101;
  bool require = false;
  auto* torsion = app.add_subcommand("torsion", "Sample the torsion of a curve file");
  torsion->add_option("curve", curve_file, "Curve file")->required();
  torsion->add_option("--t-min", t0, "First sample");
  torsion->add_option("--t-max", t1, "Last sample");
  torsion->add_option("--t-count", tn, "Number of samples");
  torsion->add_flag("--require-nondegenerate", require, "Fail when the torsion vanishes at a sample");

  int rd = 3;
  double ralpha = 3.0, rstep = 1.0 / 16.0;
  auto* region = app.add_subcommand("region", "Tabulate the admissible (1/p, 1/q) region");
  region->add_option("--d", rd, "Dimension")->required();
  region->add_option("--alpha", ralpha, "Measure dimension")->required();
  region->add_option("--step", rstep, "Grid step in (1/p, 1/q)");

  struct Experiment {
    const char* name;
    const char* help;
    cli::Parser parse;
  };
  const Experiment experiments[] = {
      {"scaling", "Lambda-scaling of the family-sup ratio", cli::parse_scaling},
      {"sharpness", "Knapp sharpness on rectangles", cli::parse_sharpness},
      {"decompose", "Certified dyadic decompositions", cli::parse_decompose},
      {"multilinear", "Multilinear L^2 and L^q(mu) bounds", cli::parse_multilinear},
      {"finitetype", "Dyadic reduction for curves of finite type", cli::parse_finitetype},
      {"measure-audit", "Regularity audit and mollified bound", cli::parse_measure_audit},
      {"bench", "Engine throughput and determinism", cli::parse_bench},
  };
  std::string config;
  std::vector<std::pair<CLI::App*, const Experiment*>> subs;
  for (const auto& e : experiments) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("config", config, "Config file")->required();
    subs.emplace_back(sub, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*torsion) return cmd_torsion(g, curve_file, t0, t1, tn, require);
    if (*region) return cmd_region(g, rd, ralpha, rstep);
    for (const auto& [sub, e] : subs)
      if (*sub) return cli::run_config_command(g, e->name, config, e->parse);
  } catch (const ToleranceError& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return cli::kExitCertification;
  } catch (const RefinementError& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return cli::kExitCertification;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return cli::kExitCertification;
  }
  return cli::kExitConfig;
}
