// SPDX-License-Identifier: Apache-2.0
//
// Flat key-value configuration text with [section] headers, builders for
// curves and measures from it, a stable content hash, and CSV output at
// 17 significant digits.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvelab/curve.hpp"
#include "curvelab/errors.hpp"
#include "curvelab/estimate.hpp"
#include "curvelab/measure.hpp"

namespace curvelab {

/// 17 significant digits; enough to round-trip every double.
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  if (t == "inf" || t == "infinity" || t == "Inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
    throw ParseError(where + ": expected a number, got '" + t + "'");
  return v;
}

/// Whitespace- or comma-separated tokens.
inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Keys are "section.key" ("key" before any header). Lines starting with
/// '#' or ';' are comments. Every key must be read before `finish()`.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>") {
    Config c;
    c.source_ = source;
    std::istringstream in(text);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const std::string t = trim(line);
      const std::string where = source + ":" + std::to_string(no);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) throw ParseError(where + ": malformed section header");
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
      const std::string key = trim(std::string_view(t).substr(0, eq));
      std::string value = trim(std::string_view(t).substr(eq + 1));
      if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
      if (key.empty()) throw ParseError(where + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (!c.values_.emplace(full, value).second) throw ParseError(where + ": duplicate key '" + full + "'");
      c.lines_[full] = where;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  const std::string& source() const noexcept { return source_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
    lines_[key] = "<override>";
  }

  std::string str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ParseError(source_ + ": missing key '" + key + "'");
    used_.insert(key);
    return it->second;
  }
  std::string str(const std::string& key, const std::string& fallback) const { return has(key) ? str(key) : fallback; }

  double num(const std::string& key) const { return parse_number(str(key), where(key)); }
  double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

  int integer(const std::string& key) const {
    const double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError(where(key) + ": expected an integer");
    return static_cast<int>(v);
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t u64(const std::string& key) const {
    const std::string t = str(key);
    std::uint64_t v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
      throw ParseError(where(key) + ": expected an unsigned integer");
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(where(key) + ": expected true or false");
  }

  std::vector<double> nums(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : split_list(str(key))) out.push_back(parse_number(t, where(key)));
    if (out.empty()) throw ParseError(where(key) + ": empty list");
    return out;
  }

  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (double v : nums(key)) {
      if (v != std::floor(v)) throw ParseError(where(key) + ": expected integers");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  /// Unread keys are configuration mistakes.
  void finish() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ParseError(where(k) + ": unknown key '" + k + "'");
  }

  /// Sorted "key = value" lines; the hash input.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
    return s;
  }

  std::string hash() const { return hex64(fnv1a(canonical())); }

  std::string where(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? source_ : it->second;
  }

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> lines_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Curves

/// kind = model (d, optional tuple) or polynomial (d, component0..component{d-1}
/// as ascending coefficient lists, optional tuple, order_bound, name).
inline CurveSpec curve_from_config(const Config& c, const std::string& prefix = "curve") {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  const std::string kind = c.str(p + "kind", "polynomial");
  std::optional<ExponentTuple> a;
  if (c.has(p + "tuple")) a = ExponentTuple(c.ints(p + "tuple"));
  if (kind == "model") {
    if (a) return CurveSpec::model(*a);
    return CurveSpec::model(c.integer(p + "d"));
  }
  if (kind != "polynomial") throw ParseError(c.where(p + "kind") + ": unknown curve kind '" + kind + "'");
  const int d = c.integer(p + "d");
  if (d < 1 || d > 16) throw ParseError(c.where(p + "d") + ": dimension must lie in 1..16");
  std::vector<Polynomial> comps;
  for (int i = 0; i < d; ++i) comps.emplace_back(c.nums(p + "component" + std::to_string(i)));
  return CurveSpec(std::move(comps), c.integer(p + "order_bound", 0), c.str(p + "name", "curve"), a);
}

/// Inverse of curve_from_config for polynomial curves.
inline std::string curve_to_text(const CurveSpec& c) {
  std::ostringstream os;
  os << "[curve]\nkind = polynomial\nname = " << c.name() << "\nd = " << c.dimension()
     << "\norder_bound = " << c.order_bound() << "\n";
  if (c.tuple()) {
    os << "tuple =";
    for (int v : c.tuple()->values()) os << " " << v;
    os << "\n";
  }
  for (int i = 0; i < c.dimension(); ++i) {
    os << "component" << i << " =";
    for (double v : c.component(i).coeffs()) os << " " << format_double(v);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Measures

/// Rows "x_1,...,x_d,weight"; a first line with non-numeric fields is a header.
inline DiscreteMeasure read_atoms_csv(const std::string& path, int d, double alpha, double constant, double spacing) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open atom file '" + path + "'");
  std::vector<double> coords, weights;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split_list(t);
    const std::string where = path + ":" + std::to_string(no);
    if (no == 1 && !f.empty() && !f[0].empty() && std::isalpha(static_cast<unsigned char>(f[0][0])) && f[0] != "inf")
      continue;
    if (static_cast<int>(f.size()) != d + 1)
      throw ParseError(where + ": expected " + std::to_string(d + 1) + " fields");
    for (int k = 0; k < d; ++k) coords.push_back(parse_number(f[static_cast<std::size_t>(k)], where));
    weights.push_back(parse_number(f.back(), where));
  }
  return DiscreteMeasure::from_points(d, std::move(coords), std::move(weights), alpha, constant, spacing,
                                      MeasureOrigin{"atoms", {{"path", path}}, 0});
}

/// kind = lebesgue (d), appendix_a (d, alpha, j), cantor (d, ratio, depth,
/// embedding) or atoms (path, d, alpha, constant, spacing).
inline MeasureModel measure_from_config(const Config& c, const std::string& prefix = "measure") {
  const std::string p = prefix + ".";
  const std::string kind = c.str(p + "kind");
  if (kind == "lebesgue") return MeasureModel::lebesgue(c.integer(p + "d"));
  if (kind == "appendix_a") return MeasureModel::appendix_a(c.integer(p + "d"), c.num(p + "alpha"), c.integer(p + "j"));
  if (kind == "cantor") {
    const int d = c.integer(p + "d");
    return MeasureModel::fixed(make_cantor(d, c.num(p + "ratio"), c.integer(p + "depth"), c.integer(p + "embedding", d)));
  }
  if (kind == "atoms")
    return MeasureModel::fixed(read_atoms_csv(c.str(p + "path"), c.integer(p + "d"), c.num(p + "alpha"),
                                              c.num(p + "constant"), c.num(p + "spacing", 0.0)));
  throw ParseError(c.where(p + "kind") + ": unknown measure kind '" + kind + "'");
}

/// The underlying atom set of a measure model, sampled on [-extent, extent]^d
/// for the analytic kinds.
inline DiscreteMeasure sample_measure(const MeasureModel& m, double extent, int resolution) {
  if (m.kind() == MeasureModel::Kind::Fixed) return m.measure();
  return m.box(std::vector<double>(static_cast<std::size_t>(m.dimension()), extent), resolution);
}

// ---------------------------------------------------------------------------
// Test functions

/// kind = indicator | bump (a, b, power) | trig (degree, seed, a, b) | zero.
/// Defaults cover [0, 1]; `seed` falls back to the run seed.
inline TestFunction function_from_config(const Config& c, const std::string& prefix, std::uint64_t run_seed) {
  const std::string p = prefix + ".";
  const std::string kind = c.str(p + "kind", "indicator");
  if (kind == "zero") return TestFunction::zero();
  const double a = c.num(p + "a", 0.0), b = c.num(p + "b", 1.0);
  if (kind == "indicator") return TestFunction::indicator(a, b);
  if (kind == "bump") return TestFunction::bump(a, b, c.integer(p + "power", 2));
  if (kind == "trig")
    return TestFunction::random_trig_poly(c.has(p + "seed") ? c.u64(p + "seed") : run_seed, c.integer(p + "degree"), a, b);
  throw ParseError(c.where(p + "kind") + ": unknown function kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Exponent pairs "p:q", with "inf" allowed

inline std::vector<std::pair<double, double>> parse_pairs(const Config& c, const std::string& key) {
  std::vector<std::pair<double, double>> out;
  for (const auto& t : split_list(c.str(key))) {
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw ParseError(c.where(key) + ": pairs are written p:q");
    out.emplace_back(parse_number(t.substr(0, colon), c.where(key)), parse_number(t.substr(colon + 1), c.where(key)));
  }
  if (out.empty()) throw ParseError(c.where(key) + ": no exponent pairs");
  return out;
}

// ---------------------------------------------------------------------------
// CSV

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) { return add(format_double(v)); }
    Row& operator<<(int v) { return add(std::to_string(v)); }
    Row& operator<<(long v) { return add(std::to_string(v)); }
    Row& operator<<(long long v) { return add(std::to_string(v)); }
    Row& operator<<(unsigned v) { return add(std::to_string(v)); }
    Row& operator<<(unsigned long v) { return add(std::to_string(v)); }
    Row& operator<<(unsigned long long v) { return add(std::to_string(v)); }
    Row& operator<<(bool v) { return add(v ? "true" : "false"); }
    Row& operator<<(const std::string& v) { return add(quote(v)); }
    Row& operator<<(const char* v) { return add(quote(v)); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    Row& add(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    static std::string quote(const std::string& v) {
      if (v.find_first_of(",\"\n") == std::string::npos) return v;
      std::string q = "\"";
      for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::vector<std::string>& cells_;
  };

  Row row() {
    rows_.emplace_back();
    return Row(rows_.back());
  }

  std::size_t size() const noexcept { return rows_.size(); }

  /// A "# config_hash=..." line when `hash` is nonempty, then header and rows.
  std::string str(const std::string& hash = {}) const {
    std::string s;
    if (!hash.empty()) s += "# config_hash=" + hash + "\n";
    s += join(header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) throw DomainError("CSV row width differs from the header");
      s += join(r);
    }
    return s;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s + "\n";
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace curvelab
