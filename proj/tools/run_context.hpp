// SPDX-License-Identifier: Apache-2.0
//
// Output directory handling for the command-line front end: overwrite
// protection, config-hash stamping, resume checks, the key-value summary,
// and the timestamped sidecar log.
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "curvelab/config.hpp"
#include "curvelab/errors.hpp"

namespace cli {

namespace fs = std::filesystem;

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCertification = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out;
  bool force = false;
  bool report_only = false;
  bool resume = false;
};

/// Ordered key-value lines.
class Summary {
 public:
  template <class T>
  void add(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    if constexpr (std::is_same_v<T, bool>)
      os << (value ? "true" : "false");
    else
      os << value;
    items_.emplace_back(key, os.str());
  }
  const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Reads "key = value" lines of a summary file.
inline std::map<std::string, std::string> read_summary(const fs::path& p) {
  std::map<std::string, std::string> m;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

class RunContext {
 public:
  RunContext(const Globals& g, std::string command, std::string hash)
      : g_(g), command_(std::move(command)), hash_(std::move(hash)), dir_(g.out.empty() ? "curvelab-" + command_ : g.out),
        start_(std::chrono::steady_clock::now()) {}

  const std::string& hash() const noexcept { return hash_; }
  const fs::path& dir() const noexcept { return dir_; }

  /// Recorded exit code when --resume finds a completed run with the same
  /// hash. Throws ParseError when the directory is in use and neither
  /// --force nor a matching --resume applies.
  std::optional<int> prepare() {
    const fs::path summary = dir_ / "summary.txt";
    const bool occupied = fs::exists(dir_) && !fs::is_empty(dir_);
    if (g_.resume && fs::exists(summary)) {
      const auto m = read_summary(summary);
      const auto it = m.find("config_hash");
      if (it == m.end() || it->second != hash_)
        throw curvelab::ParseError("config hash " + hash_ + " differs from the recorded run in " + dir_.string() +
                                   "; refusing to resume");
      if (m.count("status") && m.at("status") == "complete" && m.count("exit_code")) {
        log("resume: run already complete, nothing recomputed");
        return std::stoi(m.at("exit_code"));
      }
    } else if (occupied && !g_.force && !g_.resume) {
      throw curvelab::ParseError("output directory " + dir_.string() + " is not empty; pass --force to overwrite");
    }
    fs::create_directories(dir_);
    log("start " + command_ + " config_hash=" + hash_ + " workers=" + std::to_string(g_.workers));
    return std::nullopt;
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw curvelab::ParseError("cannot write " + (dir_ / name).string());
    out << content;
  }

  void write_csv(const std::string& name, const curvelab::CsvTable& t) const { write(name, t.str(hash_)); }

  /// Writes summary.txt and returns the exit code for the verdict. A run
  /// whose numerical certificates failed exits 3 even with --report-only.
  int finish(const Summary& s, bool pass, bool certified = true) {
    const int code = !certified ? kExitCertification : (pass || g_.report_only ? kExitPass : kExitFail);
    std::ostringstream os;
    os << "command = " << command_ << "\nconfig_hash = " << hash_ << "\n";
    for (const auto& [k, v] : s.items()) os << k << " = " << v << "\n";
    os << "verdict = " << (pass ? "PASS" : "FAIL") << "\nexit_code = " << code << "\nstatus = complete\n";
    write("summary.txt", os.str());
    std::cout << os.str();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    log("finish verdict=" + std::string(pass ? "PASS" : "FAIL") + " seconds=" + std::to_string(sec));
    return code;
  }

  /// Timestamped line in run.log; the only file that varies between identical runs.
  void log(const std::string& msg) const {
    fs::create_directories(dir_);
    std::ofstream out(dir_ / "run.log", std::ios::app);
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    out << buf << " " << msg << "\n";
  }

 private:
  Globals g_;
  std::string command_;
  std::string hash_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace cli
