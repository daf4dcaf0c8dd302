// SPDX-License-Identifier: Apache-2.0
//
// Throughput of the extension engine over batch sizes, frequencies and
// worker counts, with a checksum of the raw output bytes so runs with
// different worker counts can be compared bit for bit.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "curvelab/engine.hpp"
#include "curvelab/random.hpp"

namespace curvelab {

/// FNV-1a over the bytes of the values.
inline std::uint64_t checksum(const std::vector<Complex>& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Complex& z : v) {
    double parts[2] = {z.real(), z.imag()};
    unsigned char bytes[sizeof parts];
    std::memcpy(bytes, parts, sizeof parts);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

struct BenchmarkCase {
  double lambda = 0.0;
  std::size_t targets = 0;
  unsigned workers = 1;
  std::size_t nodes = 0;
  double seconds = 0.0;
  double rate = 0.0;  // nodes x targets per second
  double speedup = 1.0;  // against the first worker count of the same batch
  std::uint64_t checksum = 0;
};

struct BenchmarkReport {
  int dimension = 2;
  std::uint64_t seed = 0;
  unsigned hardware_threads = 0;
  std::vector<BenchmarkCase> cases;
  bool checksums_stable = true;

  std::string to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "dimension = " << dimension << "\nseed = " << seed << "\nhardware_threads = " << hardware_threads
       << "\nchecksums_stable = " << (checksums_stable ? "true" : "false") << "\ncases = " << cases.size() << "\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& c = cases[i];
      const std::string p = "case." + std::to_string(i) + ".";
      os << p << "lambda = " << c.lambda << "\n"
         << p << "targets = " << c.targets << "\n"
         << p << "workers = " << c.workers << "\n"
         << p << "nodes = " << c.nodes << "\n"
         << p << "seconds = " << c.seconds << "\n"
         << p << "node_targets_per_second = " << c.rate << "\n"
         << p << "speedup = " << c.speedup << "\n"
         << p << "checksum = " << std::hex << c.checksum << std::dec << "\n";
    }
    return os.str();
  }
};

/// Targets uniform in the cube of half-width 1 / sqrt(d); f = indicator of [0, 1];
/// gamma the model curve.
inline BenchmarkReport throughput_benchmark(const std::vector<std::size_t>& batch_sizes,
                                            const std::vector<double>& lambdas, const std::vector<unsigned>& workers,
                                            int d = 2, std::uint64_t seed = 0) {
  if (batch_sizes.empty() || lambdas.empty() || workers.empty()) throw DomainError("empty benchmark grid");
  BenchmarkReport rep;
  rep.dimension = d;
  rep.seed = seed;
  rep.hardware_threads = std::thread::hardware_concurrency();
  const CurveSpec c = CurveSpec::model(d);
  const TestFunction f = TestFunction::indicator(0.0, 1.0);
  for (double lambda : lambdas)
    for (std::size_t n : batch_sizes) {
      Rng rng(derive_seed(seed, n));
      std::vector<double> flat(n * static_cast<std::size_t>(d));
      const double r = 1.0 / std::sqrt(static_cast<double>(d));
      for (double& v : flat) v = rng.uniform(-r, r);
      const TargetSet x = TargetSet::points(d, std::move(flat));
      double base = 0.0;
      std::uint64_t first = 0;
      for (std::size_t w = 0; w < workers.size(); ++w) {
        EngineOptions opt;
        opt.workers = workers[w];
        const auto t0 = std::chrono::steady_clock::now();
        const EvalResult res = extension_eval(c, f, lambda, x, opt);
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        BenchmarkCase bc;
        bc.lambda = lambda;
        bc.targets = n;
        bc.workers = workers[w];
        bc.nodes = res.nodes;
        bc.seconds = sec;
        bc.rate = static_cast<double>(res.nodes) * static_cast<double>(n) / std::max(sec, 1e-12);
        bc.checksum = checksum(res.values);
        if (w == 0) {
          base = sec;
          first = bc.checksum;
        } else if (bc.checksum != first) {
          rep.checksums_stable = false;
        }
        bc.speedup = base / std::max(sec, 1e-12);
        rep.cases.push_back(bc);
      }
    }
  return rep;
}

}  // namespace curvelab
