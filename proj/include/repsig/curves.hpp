#pragma once

// Tabulated Z-score curves: required Z by d*m, by required p (with the
// sample-size ratio against p = 0.05), by repetition rate u, and the
// repeated-significance requirement against the continuous-monitoring bound.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "repsig/csv.hpp"
#include "repsig/errors.hpp"
#include "repsig/stats_core.hpp"

namespace repsig {

struct CurveTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& out, const CurveTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

inline const std::vector<double>& default_curve_alphas() {
  static const std::vector<double> alphas{0.10, 0.05, 0.01};
  return alphas;
}

inline CurveTable z_by_dm_curve(const std::vector<double>& alphas, std::uint64_t dm_max = 100) {
  if (dm_max < 1) throw domain_error("z_by_dm_curve: dm_max must be >= 1");
  CurveTable table;
  table.header.push_back("dm");
  for (double a : alphas) table.header.push_back("z_alpha_" + format_number(a));
  for (std::uint64_t dm = 1; dm <= dm_max; ++dm) {
    std::vector<double> row{static_cast<double>(dm)};
    for (double a : alphas) row.push_back(required_z_uniform(a, dm));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// p = k / 1000 for k = 1..50, so p = 0.05 is the exact double 0.05.
inline CurveTable z_and_size_by_p_curve() {
  CurveTable table{{"p", "z", "size_ratio"}, {}};
  const double z_ref = z_from_p_two_sided(0.05);
  for (int k = 1; k <= 50; ++k) {
    const double p = k / 1000.0;
    const double z = z_from_p_two_sided(p);
    table.rows.push_back({p, z, sample_size_ratio(z_ref, z)});
  }
  return table;
}

// u = k / 100 for k = 1..100.
inline CurveTable z_by_rate_curve(const std::vector<double>& alphas) {
  CurveTable table;
  table.header.push_back("u");
  for (double a : alphas) table.header.push_back("z_alpha_" + format_number(a));
  for (int k = 1; k <= 100; ++k) {
    const double u = k / 100.0;
    std::vector<double> row{u};
    for (double a : alphas) row.push_back(required_z_by_rate(a, u));
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Observation counts 1..t_max, roughly log-spaced, strictly increasing.
inline std::vector<std::uint64_t> log_spaced_counts(std::uint64_t t_max, std::size_t points) {
  if (t_max < 1 || points < 2) throw domain_error("log_spaced_counts: need t_max >= 1 and points >= 2");
  std::vector<std::uint64_t> out;
  const double top = std::log(static_cast<double>(t_max));
  for (std::size_t j = 0; j < points; ++j) {
    auto t = static_cast<std::uint64_t>(std::llround(std::exp(top * static_cast<double>(j) / (points - 1))));
    t = std::max<std::uint64_t>(1, std::min(t, t_max));
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  if (out.back() != t_max) out.push_back(t_max);
  return out;
}

inline CurveTable always_valid_vs_repetition_curve(double rho, double alpha, double u, std::uint64_t t_max,
                                                   std::size_t points = 200) {
  CurveTable table{{"t", "z_always_valid", "z_repetition"}, {}};
  const double z_rep = required_z_by_rate(alpha, u);
  for (std::uint64_t t : log_spaced_counts(t_max, points)) {
    table.rows.push_back({static_cast<double>(t), always_valid_z({rho, alpha, t}), z_rep});
  }
  return table;
}

}  // namespace repsig
