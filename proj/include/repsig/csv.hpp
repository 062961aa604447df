#pragma once

// CSV plumbing: number formatting for curve/threshold tables and the
// `t,criterion_id,p` p-value log format.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "repsig/errors.hpp"
#include "repsig/monitor.hpp"

namespace repsig {

/// Shortest decimal form that parses back to the same double; integral
/// values below 2^53 print without an exponent.
inline std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[400];
  const bool integral = x == std::trunc(x) && std::fabs(x) < 0x1p53;
  const auto res = integral ? std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed)
                            : std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline constexpr std::string_view kPValueLogHeader = "t,criterion_id,p";

class log_error : public parse_error {
 public:
  log_error(std::size_t line, const std::string& what, bool sequencing = false)
      : parse_error("line " + std::to_string(line) + ": " + what), line_(line), sequencing_(sequencing) {}
  std::size_t line() const { return line_; }
  // True for ordering problems (unsorted, gaps, duplicates) in otherwise well-formed rows.
  bool sequencing() const { return sequencing_; }

 private:
  std::size_t line_;
  bool sequencing_;
};

struct PValueLog {
  std::vector<SignificanceRecord> records;  // one per decision index, in order
  std::vector<std::size_t> first_line;      // source line of each record's first row
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses a p-value log. Rows must be sorted by t; each criterion's t values
/// run 1, 2, 3, ... without gaps. Sequencing problems are reported as
/// `log_error` naming the offending line.
inline PValueLog parse_pvalue_log(std::istream& in) {
  PValueLog log;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::map<std::string, std::size_t> last_t;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      if (row != kPValueLogHeader) throw log_error(lineno, "expected header '" + std::string(kPValueLogHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      throw log_error(lineno, "expected 3 comma-separated fields");
    }
    const auto t_field = detail::trim(row.substr(0, c1));
    const std::string id(detail::trim(row.substr(c1 + 1, c2 - c1 - 1)));
    const auto p_field = detail::trim(row.substr(c2 + 1));
    std::size_t t = 0;
    auto tr = std::from_chars(t_field.data(), t_field.data() + t_field.size(), t);
    if (tr.ec != std::errc() || tr.ptr != t_field.data() + t_field.size() || t < 1) {
      throw log_error(lineno, "t must be a positive integer");
    }
    double p = 0.0;
    auto pr = std::from_chars(p_field.data(), p_field.data() + p_field.size(), p);
    if (pr.ec != std::errc() || pr.ptr != p_field.data() + p_field.size() || !(p >= 0.0 && p <= 1.0)) {
      throw log_error(lineno, "p must be a number in [0, 1]");
    }
    if (id.empty()) throw log_error(lineno, "empty criterion_id");
    const std::size_t current = log.records.empty() ? 0 : log.records.back().decision_index;
    if (t < current) throw log_error(lineno, "rows not sorted by t", true);
    if (t > current + 1) throw log_error(lineno, "decision index " + std::to_string(t) + " skips " + std::to_string(current + 1), true);
    const std::size_t expected = last_t.count(id) ? last_t[id] + 1 : 1;
    if (t != expected) {
      throw log_error(lineno, t < expected ? "duplicate row for criterion '" + id + "' at t = " + std::to_string(t)
                                           : "gap in t for criterion '" + id + "'",
                      true);
    }
    last_t[id] = t;
    if (t > current) {
      log.records.push_back({t, {}});
      log.first_line.push_back(lineno);
    }
    log.records.back().pvalues[id] = p;
  }
  return log;
}

inline PValueLog load_pvalue_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return parse_pvalue_log(in);
}

}  // namespace repsig
