#pragma once

// A-priori test plans. Decision indices are 1-based throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "repsig/alpha_spend.hpp"
#include "repsig/errors.hpp"

namespace repsig {

// Absolute slack allowed when comparing spent budget against alpha.
inline constexpr double kBudgetTolerance = 1e-12;

// ceil(x) for counts that are meant to be integral but may carry a few ulps
// of representation error (0.05 * 480 and the like).
inline std::size_t ceil_count(double x) {
  const double snapped = std::round(x);
  if (std::fabs(x - snapped) <= 1e-9 * std::max(1.0, std::fabs(x))) {
    return static_cast<std::size_t>(snapped);
  }
  return static_cast<std::size_t>(std::ceil(x));
}

struct CriterionSchedule {
  std::string criterion_id;
  std::size_t num_decision_points = 1;
  std::size_t repetitions_required = 1;
  AlphaPartition alpha_entries = AlphaPartition::uniform(0.05, 1);
};

struct Subtest {
  std::size_t start_index = 1;  // a_k
  std::size_t end_index = 1;    // b_k, inclusive
  std::size_t repetitions_required = 1;
  AlphaPartition alpha_entries = AlphaPartition::uniform(0.05, 1);

  std::size_t width() const { return end_index >= start_index ? end_index - start_index + 1 : 0; }
  bool covers(std::size_t t) const { return t >= start_index && t <= end_index; }
};

struct UnlimitedPlan {
  double alpha = 0.05;
  double repetition_rate = 0.05;      // u
  std::size_t min_decision_points = 1;  // s
};

struct UnlimitedCriterion {
  std::string criterion_id;
  UnlimitedPlan plan;
};

struct SubtestCriterion {
  std::string criterion_id;
  std::vector<Subtest> subtests;
};

enum class PlanVariant { fixed_once, fixed_repeated, unlimited, general_subtests };

inline const char* to_string(PlanVariant v) {
  switch (v) {
    case PlanVariant::fixed_once: return "fixed_once";
    case PlanVariant::fixed_repeated: return "fixed_repeated";
    case PlanVariant::unlimited: return "unlimited";
    case PlanVariant::general_subtests: return "general_subtests";
  }
  return "unknown";
}

// Only the criterion list matching `variant` is populated.
struct TestPlan {
  PlanVariant variant = PlanVariant::fixed_once;
  double alpha = 0.05;
  std::vector<CriterionSchedule> schedules;
  std::vector<UnlimitedCriterion> unlimited;
  std::vector<SubtestCriterion> subtest_criteria;

  bool is_fixed() const {
    return variant == PlanVariant::fixed_once || variant == PlanVariant::fixed_repeated;
  }

  std::vector<std::string> criterion_ids() const {
    std::vector<std::string> ids;
    if (is_fixed()) {
      for (const auto& s : schedules) ids.push_back(s.criterion_id);
    } else if (variant == PlanVariant::unlimited) {
      for (const auto& c : unlimited) ids.push_back(c.criterion_id);
    } else {
      for (const auto& c : subtest_criteria) ids.push_back(c.criterion_id);
    }
    return ids;
  }

  std::size_t num_criteria() const { return criterion_ids().size(); }

  // Last decision index any criterion can use; nullopt-like max for unlimited.
  std::size_t horizon() const {
    std::size_t h = 0;
    if (is_fixed()) {
      for (const auto& s : schedules) h = std::max(h, s.num_decision_points);
    } else if (variant == PlanVariant::general_subtests) {
      for (const auto& c : subtest_criteria)
        for (const auto& k : c.subtests) h = std::max(h, k.end_index);
    } else {
      h = std::numeric_limits<std::size_t>::max();
    }
    return h;
  }

  bool bounded() const { return variant != PlanVariant::unlimited; }
};

struct Violation {
  std::string where;       // criterion id or "criterion/subtest k"; "plan" for plan-wide
  std::string constraint;  // short stable name, e.g. "budget exceeded"
  std::string detail;
};

struct ValidationResult {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

class plan_rejected : public std::invalid_argument {
 public:
  explicit plan_rejected(ValidationResult result)
      : std::invalid_argument(summarize(result)), result_(std::move(result)) {}

  const ValidationResult& result() const { return result_; }

 private:
  static std::string summarize(const ValidationResult& r) {
    std::string s = "invalid plan";
    for (const auto& v : r.violations) s += "; " + v.where + ": " + v.constraint;
    return s;
  }
  ValidationResult result_;
};

namespace detail {

inline void check_partition(const AlphaPartition& part, std::size_t expected, const std::string& where,
                            ValidationResult& out) {
  if (part.size() != expected) {
    out.violations.push_back({where, "entries mismatch",
                              "partition has " + std::to_string(part.size()) + " entries, expected " +
                                  std::to_string(expected)});
  }
  if (part.kind() == AlphaPartition::Kind::geometric && part.unbounded()) {
    out.violations.push_back({where, "unbounded partition", "a bounded schedule needs a finite partition"});
  }
}

}  // namespace detail

inline ValidationResult validate_plan(const TestPlan& plan) {
  ValidationResult out;
  if (!(plan.alpha > 0.0 && plan.alpha < 1.0)) {
    out.violations.push_back({"plan", "alpha out of range", "alpha must lie in (0, 1)"});
  }
  const bool wrong_lists =
      (plan.is_fixed() && (!plan.unlimited.empty() || !plan.subtest_criteria.empty())) ||
      (plan.variant == PlanVariant::unlimited && (!plan.schedules.empty() || !plan.subtest_criteria.empty())) ||
      (plan.variant == PlanVariant::general_subtests && (!plan.schedules.empty() || !plan.unlimited.empty()));
  if (wrong_lists) {
    out.violations.push_back({"plan", "variant mismatch", "criteria given for a different plan variant"});
  }

  const auto ids = plan.criterion_ids();
  if (ids.empty()) out.violations.push_back({"plan", "no criteria", "a plan needs at least one criterion"});
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) out.violations.push_back({"plan", "empty criterion id", ""});
    if (!seen.insert(id).second) out.violations.push_back({id, "duplicate criterion", ""});
  }

  long double spent = 0.0L;
  if (plan.is_fixed()) {
    for (const auto& s : plan.schedules) {
      if (s.num_decision_points < 1) {
        out.violations.push_back({s.criterion_id, "no decision points", "d_i must be >= 1"});
      }
      if (s.repetitions_required < 1) {
        out.violations.push_back({s.criterion_id, "repetitions below one", "r_i must be >= 1"});
      }
      if (s.repetitions_required > s.num_decision_points) {
        out.violations.push_back({s.criterion_id, "repetitions exceed decision points",
                                  "r_i = " + std::to_string(s.repetitions_required) + " > d_i = " +
                                      std::to_string(s.num_decision_points)});
      }
      if (plan.variant == PlanVariant::fixed_once && s.repetitions_required != 1) {
        out.violations.push_back({s.criterion_id, "fixed_once requires r = 1", ""});
      }
      detail::check_partition(s.alpha_entries, s.num_decision_points, s.criterion_id, out);
      spent += s.alpha_entries.sum();
    }
  } else if (plan.variant == PlanVariant::unlimited) {
    for (const auto& c : plan.unlimited) {
      const auto& u = c.plan;
      if (!(u.alpha > 0.0 && u.alpha < 1.0)) {
        out.violations.push_back({c.criterion_id, "alpha out of range", "criterion alpha must lie in (0, 1)"});
      }
      if (!(u.repetition_rate > 0.0 && u.repetition_rate < 1.0)) {
        out.violations.push_back({c.criterion_id, "repetition rate out of range", "u must lie in (0, 1)"});
      }
      if (u.min_decision_points < 1) {
        out.violations.push_back({c.criterion_id, "minimum decision points below one", "s must be >= 1"});
      }
      spent += u.alpha;
    }
  } else {
    for (const auto& c : plan.subtest_criteria) {
      if (c.subtests.empty()) {
        out.violations.push_back({c.criterion_id, "no subtests", "a criterion needs at least one subtest"});
      }
      for (std::size_t k = 0; k < c.subtests.size(); ++k) {
        const auto& st = c.subtests[k];
        const std::string where = c.criterion_id + "/subtest " + std::to_string(k + 1);
        if (st.start_index < 1 || st.end_index < st.start_index) {
          out.violations.push_back({where, "invalid window", "need 1 <= a_k <= b_k"});
          continue;
        }
        if (st.repetitions_required < 1) {
          out.violations.push_back({where, "repetitions below one", "r_k must be >= 1"});
        }
        if (st.repetitions_required > st.width()) {
          out.violations.push_back({where, "repetitions exceed window",
                                    "r_k = " + std::to_string(st.repetitions_required) +
                                        " > window width " + std::to_string(st.width())});
        }
        detail::check_partition(st.alpha_entries, st.width(), where, out);
        spent += st.alpha_entries.sum();
      }
    }
  }

  if (spent > static_cast<long double>(plan.alpha) + kBudgetTolerance) {
    out.violations.push_back({"plan", "budget exceeded",
                              "entries sum to " + std::to_string(static_cast<double>(spent)) + " > alpha = " +
                                  std::to_string(plan.alpha)});
  } else if (spent < static_cast<long double>(plan.alpha) - kBudgetTolerance) {
    out.warnings.push_back("budget underspent: entries sum to " + std::to_string(static_cast<double>(spent)) +
                           " < alpha = " + std::to_string(plan.alpha));
  }
  return out;
}

inline void require_valid(const TestPlan& plan) {
  auto result = validate_plan(plan);
  if (!result.ok()) throw plan_rejected(std::move(result));
}

namespace detail {

inline std::size_t find_criterion(const TestPlan& plan, const std::string& id) {
  const auto ids = plan.criterion_ids();
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw domain_error("unknown criterion '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace detail

/// The per-point threshold of a fixed schedule: alpha_it * r_i.
inline double schedule_threshold(const CriterionSchedule& s, std::size_t t) {
  if (t < 1 || t > s.num_decision_points) {
    throw domain_error("decision index " + std::to_string(t) + " outside 1.." +
                       std::to_string(s.num_decision_points) + " for criterion '" + s.criterion_id + "'");
  }
  return std::min(1.0, s.alpha_entries[t - 1] * static_cast<double>(s.repetitions_required));
}

inline double subtest_threshold(const Subtest& st, std::size_t t) {
  if (!st.covers(t)) throw domain_error("decision index outside subtest window");
  return std::min(1.0, st.alpha_entries[t - st.start_index] * static_cast<double>(st.repetitions_required));
}

/// Per-point threshold of the unlimited rule: alpha * u * s / (4t).
inline double unlimited_threshold(const UnlimitedPlan& plan, std::size_t t) {
  if (t < 1) throw domain_error("decision index must be >= 1");
  return plan.alpha * plan.repetition_rate * static_cast<double>(plan.min_decision_points) /
         (4.0 * static_cast<double>(t));
}

/// (subtest index k, threshold) for each subtest of the criterion covering t.
inline std::vector<std::pair<std::size_t, double>> subtest_thresholds(const TestPlan& plan,
                                                                      const std::string& criterion_id,
                                                                      std::size_t t) {
  if (plan.variant != PlanVariant::general_subtests) {
    throw domain_error("subtest_thresholds: plan has no subtests");
  }
  const auto& c = plan.subtest_criteria[detail::find_criterion(plan, criterion_id)];
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k = 0; k < c.subtests.size(); ++k) {
    if (c.subtests[k].covers(t)) out.emplace_back(k + 1, subtest_threshold(c.subtests[k], t));
  }
  return out;
}

/// Largest p-value that counts as a hit for `criterion_id` at decision index t.
/// For subtest plans this is the most lenient covering subtest (0 if none covers t).
inline double threshold(const TestPlan& plan, const std::string& criterion_id, std::size_t t) {
  const std::size_t i = detail::find_criterion(plan, criterion_id);
  switch (plan.variant) {
    case PlanVariant::fixed_once:
    case PlanVariant::fixed_repeated:
      return schedule_threshold(plan.schedules[i], t);
    case PlanVariant::unlimited:
      return unlimited_threshold(plan.unlimited[i].plan, t);
    case PlanVariant::general_subtests: {
      if (t < 1 || t > plan.horizon()) throw domain_error("decision index outside all subtest windows");
      double best = 0.0;
      for (const auto& [k, thr] : subtest_thresholds(plan, criterion_id, t)) best = std::max(best, thr);
      return best;
    }
  }
  return 0.0;
}

/// Explicit subtests whose union realizes the unlimited rule: subtest k spans
/// decision points 1..2^k s with budget alpha 2^-k and ceil(u 2^k s / 2) repetitions.
inline std::vector<Subtest> canonical_unlimited_subtests(const UnlimitedPlan& plan, std::size_t max_k) {
  if (!(plan.alpha > 0.0 && plan.alpha < 1.0) || !(plan.repetition_rate > 0.0 && plan.repetition_rate < 1.0) ||
      plan.min_decision_points < 1) {
    throw domain_error("canonical_unlimited_subtests: invalid unlimited plan");
  }
  if (max_k < 1) throw domain_error("canonical_unlimited_subtests: max_k must be >= 1");
  const std::uint64_t s = plan.min_decision_points;
  std::size_t usable = 0;
  // Waypoints must also be exact uniform-run lengths.
  while (s <= (AlphaPartition::kMaxRunLength >> (usable + 1))) ++usable;
  if (max_k > usable) {
    throw domain_error("canonical_unlimited_subtests: 2^k * s exceeds 2^53; max usable k is " +
                       std::to_string(usable));
  }
  std::vector<Subtest> out;
  out.reserve(max_k);
  for (std::size_t k = 1; k <= max_k; ++k) {
    const std::uint64_t waypoint = s << k;
    const double budget = std::ldexp(plan.alpha, -static_cast<int>(k));
    Subtest st;
    st.start_index = 1;
    st.end_index = static_cast<std::size_t>(waypoint);
    st.repetitions_required = ceil_count(plan.repetition_rate * static_cast<double>(waypoint) / 2.0);
    st.alpha_entries = AlphaPartition::uniform(budget, static_cast<std::size_t>(waypoint));
    out.push_back(std::move(st));
  }
  return out;
}

/// Smallest k with 2^k s >= t (the subtest that certifies an unlimited-rule stop at t).
inline std::size_t covering_waypoint_index(const UnlimitedPlan& plan, std::size_t t) {
  std::size_t k = 1;
  while ((static_cast<std::uint64_t>(plan.min_decision_points) << k) < t) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Builders for the common plan shapes.
// ---------------------------------------------------------------------------

inline std::string default_criterion_id(std::size_t i) { return "c" + std::to_string(i + 1); }

// m criteria with d decision points each, alpha split uniformly over all d*m
// pairs, r repetitions per criterion.
inline TestPlan make_uniform_plan(double alpha, std::size_t d, std::size_t r = 1, std::size_t m = 1) {
  if (m < 1) throw domain_error("make_uniform_plan: m must be >= 1");
  TestPlan plan;
  plan.variant = r == 1 ? PlanVariant::fixed_once : PlanVariant::fixed_repeated;
  plan.alpha = alpha;
  for (std::size_t i = 0; i < m; ++i) {
    plan.schedules.push_back(
        {default_criterion_id(i), d, r, AlphaPartition::uniform(alpha / static_cast<double>(m), d)});
  }
  return plan;
}

// Single criterion requiring significance at a fraction u of d uniformly
// budgeted points; r = ceil(u d).
inline TestPlan make_fixed_rate_plan(double alpha, std::size_t d, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw domain_error("make_fixed_rate_plan: u must lie in (0, 1]");
  const std::size_t r = std::max<std::size_t>(1, ceil_count(u * static_cast<double>(d)));
  TestPlan plan = make_uniform_plan(alpha, d, r, 1);
  plan.variant = PlanVariant::fixed_repeated;
  return plan;
}

inline TestPlan make_unlimited_plan(double alpha, double u, std::size_t s) {
  TestPlan plan;
  plan.variant = PlanVariant::unlimited;
  plan.alpha = alpha;
  plan.unlimited.push_back({default_criterion_id(0), {alpha, u, s}});
  return plan;
}

inline TestPlan make_subtest_plan(double alpha, std::vector<Subtest> subtests) {
  TestPlan plan;
  plan.variant = PlanVariant::general_subtests;
  plan.alpha = alpha;
  plan.subtest_criteria.push_back({default_criterion_id(0), std::move(subtests)});
  return plan;
}

inline TestPlan make_canonical_subtest_plan(const UnlimitedPlan& unlimited, std::size_t max_k) {
  return make_subtest_plan(unlimited.alpha, canonical_unlimited_subtests(unlimited, max_k));
}

}  // namespace repsig
