#pragma once

// Command implementations behind the `repsig` executable. Each returns the
// process exit code: 0 success, 1 domain violation, 2 I/O or parse failure.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "repsig/csv.hpp"
#include "repsig/curves.hpp"
#include "repsig/errors.hpp"
#include "repsig/monitor.hpp"
#include "repsig/plan_json.hpp"
#include "repsig/plans.hpp"
#include "repsig/simulate.hpp"

namespace repsig::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitParse = 2;

namespace detail {

inline json violations_to_json(const ValidationResult& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"where", x.where}, {"constraint", x.constraint}, {"detail", x.detail}});
  return {{"ok", r.ok()}, {"violations", v}, {"warnings", r.warnings}};
}

inline void print_violations(std::ostream& err, const ValidationResult& r) {
  for (const auto& v : r.violations) {
    err << "violation: " << v.where << ": " << v.constraint;
    if (!v.detail.empty()) err << " (" << v.detail << ")";
    err << '\n';
  }
}

inline void print_warnings(std::ostream& err, const ValidationResult& r) {
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
}

// Loads and validates a plan document; on failure writes diagnostics and
// sets `code`.
inline std::optional<PlanDocument> load_valid_plan(const std::string& path, std::ostream& err, int& code) {
  try {
    PlanDocument doc = load_plan_document(path);
    const auto result = validate_plan(doc.plan);
    print_warnings(err, result);
    if (!result.ok()) {
      print_violations(err, result);
      code = kExitViolation;
      return std::nullopt;
    }
    return doc;
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << '\n';
    code = kExitParse;
  } catch (const std::domain_error& e) {
    err << "violation: " << e.what() << '\n';
    code = kExitViolation;
  }
  return std::nullopt;
}

// "t1..t2" or a single "t".
inline std::pair<std::size_t, std::size_t> parse_points(const std::string& spec) {
  auto to_index = [&spec](const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || v < 1) throw domain_error("invalid --points '" + spec + "'");
    return static_cast<std::size_t>(v);
  };
  const auto dots = spec.find("..");
  if (dots == std::string::npos) {
    const auto t = to_index(spec);
    return {t, t};
  }
  const auto lo = to_index(spec.substr(0, dots));
  const auto hi = to_index(spec.substr(dots + 2));
  if (hi < lo) throw domain_error("invalid --points '" + spec + "': end precedes start");
  return {lo, hi};
}

}  // namespace detail

inline int cmd_plan_validate(const std::string& path, bool as_json, std::ostream& out, std::ostream& err) {
  ValidationResult result;
  try {
    result = validate_plan(load_plan_document(path).plan);
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::domain_error& e) {
    result.violations.push_back({"plan", "invalid value", e.what()});
  }
  if (as_json) {
    out << detail::violations_to_json(result).dump(2) << '\n';
  } else if (result.ok()) {
    out << "ok\n";
  }
  detail::print_warnings(err, result);
  detail::print_violations(err, result);
  return result.ok() ? kExitOk : kExitViolation;
}

inline int cmd_thresholds(const std::string& path, const std::optional<std::string>& criterion,
                          const std::optional<std::string>& points, std::ostream& out, std::ostream& err) {
  int code = kExitOk;
  const auto doc = detail::load_valid_plan(path, err, code);
  if (!doc) return code;
  const TestPlan& plan = doc->plan;
  try {
    const auto ids = plan.criterion_ids();
    std::string id;
    if (criterion) {
      id = *criterion;
    } else if (ids.size() == 1) {
      id = ids.front();
    } else {
      err << "error: plan has " << ids.size() << " criteria; choose one with --criterion\n";
      return kExitViolation;
    }
    std::pair<std::size_t, std::size_t> range;
    if (points) {
      range = detail::parse_points(*points);
    } else if (plan.bounded()) {
      std::size_t last = 0;
      if (plan.is_fixed()) {
        last = plan.schedules[repsig::detail::find_criterion(plan, id)].num_decision_points;
      } else {
        for (const auto& st : plan.subtest_criteria[repsig::detail::find_criterion(plan, id)].subtests)
          last = std::max(last, st.end_index);
      }
      range = {1, last};
    } else {
      err << "error: unlimited plans need --points t1..t2\n";
      return kExitViolation;
    }
    std::ostringstream table;
    table << "t,threshold_p,required_z\n";
    for (std::size_t t = range.first; t <= range.second; ++t) {
      const double thr = threshold(plan, id, t);
      const double z = thr > 0.0 ? z_from_p_two_sided(std::min(thr, 1.0)) : std::numeric_limits<double>::infinity();
      table << t << ',' << format_number(thr) << ',' << format_number(z) << '\n';
    }
    out << table.str();
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitOk;
}

inline int cmd_monitor(const std::string& plan_path, const std::string& log_path, UnlimitedHitMode mode, bool as_json,
                       std::ostream& out, std::ostream& err) {
  int code = kExitOk;
  const auto doc = detail::load_valid_plan(plan_path, err, code);
  if (!doc) return code;
  PValueLog log;
  try {
    log = load_pvalue_log(log_path);
  } catch (const log_error& e) {
    err << (e.sequencing() ? "sequencing error: " : "parse error: ") << e.what() << '\n';
    return e.sequencing() ? kExitViolation : kExitParse;
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  }

  Monitor monitor(doc->plan, mode);
  std::size_t consumed = 0;
  for (std::size_t i = 0; i < log.records.size() && !monitor.terminal(); ++i) {
    try {
      monitor.update(log.records[i]);
      ++consumed;
    } catch (const std::logic_error& e) {
      // sequencing_error, state_error and domain_error all derive from logic_error.
      err << "sequencing error: line " << log.first_line[i] << ": " << e.what() << '\n';
      return kExitViolation;
    }
  }
  if (consumed < log.records.size()) {
    err << "note: ignored " << (log.records.size() - consumed) << " decision point(s) after the terminal decision\n";
  }

  const Decision& d = monitor.decision();
  const auto remaining = monitor.hit_requirement_remaining();
  if (as_json) {
    json j = {{"decision", to_string(d.kind)}, {"t", monitor.decision_index()}, {"remaining", remaining}};
    if (d.kind == DecisionKind::stop_success) j["confidence"] = d.confidence;
    out << j.dump(2) << '\n';
  } else {
    out << "decision," << to_string(d.kind) << '\n';
    out << "t," << monitor.decision_index() << '\n';
    if (d.kind == DecisionKind::stop_success) out << "confidence," << format_number(d.confidence) << '\n';
    out << "criterion_id,remaining\n";
    for (const auto& [id, r] : remaining) out << id << ',' << r << '\n';
  }
  return kExitOk;
}

struct CurveOptions {
  std::vector<double> alphas;  // empty: 0.10, 0.05, 0.01
  std::uint64_t dm_max = 100;
  double alpha = 0.05;                 // fig7
  double u = 0.05;                     // fig7
  std::uint64_t t_max = 20'000'000;    // fig7
  std::optional<double> rho;           // fig7; default puts the comparator minimum at t_max
  std::size_t points = 200;            // fig7
};

inline int cmd_curves(const std::string& which, const CurveOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto& alphas = opts.alphas.empty() ? default_curve_alphas() : opts.alphas;
    CurveTable table;
    if (which == "fig4") {
      table = z_by_dm_curve(alphas, opts.dm_max);
    } else if (which == "fig5") {
      table = z_and_size_by_p_curve();
    } else if (which == "fig6") {
      table = z_by_rate_curve(alphas);
    } else if (which == "fig7") {
      const double rho = opts.rho.value_or(always_valid_rho_for_minimum_at(static_cast<double>(opts.t_max), opts.alpha));
      table = always_valid_vs_repetition_curve(rho, opts.alpha, opts.u, opts.t_max, opts.points);
    } else {
      err << "error: unknown figure '" << which << "' (expected fig4, fig5, fig6 or fig7)\n";
      return kExitViolation;
    }
    write_csv(out, table);
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitOk;
}

struct SimulateOptions {
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_path;
  std::optional<std::string> histogram_path;
  std::size_t threads = 0;
};

// Seed precedence: --seed, then the config's stream.seed, then REPSIG_SEED, then 0.
inline std::uint64_t resolve_seed(const SimulateOptions& opts, const json& config) {
  if (opts.seed) return *opts.seed;
  if (config.contains("stream") && config["stream"].contains("seed")) return config["stream"]["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("REPSIG_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw config_error(std::string("REPSIG_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 0;
}

inline int cmd_simulate(const std::string& config_path, const SimulateOptions& opts, std::ostream& out,
                        std::ostream& err) {
  json config;
  TestPlan plan;
  StreamConfig stream;
  std::size_t trials = 0;
  std::optional<AlwaysValidParams> av;
  std::uint64_t seed = 0;
  try {
    config = read_json_file(config_path);
    repsig::detail::expect_keys(config, "simulation", {"schema_version", "plan", "stream"},
                                {"trials", "always_valid", "metadata"});
    if (!config["schema_version"].is_number_integer() || config["schema_version"].get<int>() != kSchemaVersion) {
      throw parse_error("simulation: unsupported schema_version");
    }
    plan = plan_from_json(config["plan"]);
    stream = stream_from_json(config["stream"]);
    if (config.contains("trials")) trials = repsig::detail::get_count(config, "trials", "simulation");
    if (config.contains("always_valid")) {
      const json& a = config["always_valid"];
      repsig::detail::expect_keys(a, "simulation.always_valid", {"rho"}, {"alpha"});
      AlwaysValidParams p;
      p.rho = repsig::detail::get_number(a, "rho", "simulation.always_valid");
      p.alpha = a.contains("alpha") ? repsig::detail::get_number(a, "alpha", "simulation.always_valid") : plan.alpha;
      av = p;
    }
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }

  try {
    if (opts.trials) trials = *opts.trials;
    if (trials == 0) throw config_error("trials must be >= 1 (set --trials or \"trials\")");
    seed = resolve_seed(opts, config);
    stream.seed = seed;
    json report;
    std::map<std::size_t, std::size_t> histogram;
    if (av) {
      const auto paired = compare_always_valid(plan, *av, stream, trials, seed, opts.threads);
      report = paired_report_to_json(paired);
      histogram = paired.repetition.stop_histogram;
    } else {
      const auto r = run_trials(plan, stream, trials, seed, opts.threads);
      report = report_to_json(r);
      histogram = r.stop_histogram;
    }
    report["schema_version"] = kSchemaVersion;
    if (config.contains("metadata")) report["metadata"] = config["metadata"];
    const std::string text = report.dump(2) + "\n";
    if (opts.out_path) {
      std::ofstream f(*opts.out_path, std::ios::binary);
      if (!f) {
        err << "error: cannot write '" << *opts.out_path << "'\n";
        return kExitParse;
      }
      f << text;
    } else {
      out << text;
    }
    if (opts.histogram_path) {
      std::ofstream f(*opts.histogram_path, std::ios::binary);
      if (!f) {
        err << "error: cannot write '" << *opts.histogram_path << "'\n";
        return kExitParse;
      }
      f << "t,stops\n";
      for (const auto& [t, n] : histogram) f << t << ',' << n << '\n';
    }
  } catch (const plan_rejected& e) {
    detail::print_violations(err, e.result());
    return kExitViolation;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitViolation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitOk;
}

}  // namespace repsig::cli
