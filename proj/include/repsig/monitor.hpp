#pragma once

// Incremental evaluation of a p-value stream against a validated plan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repsig/errors.hpp"
#include "repsig/plans.hpp"

namespace repsig {

struct SignificanceRecord {
  std::size_t decision_index = 1;
  std::map<std::string, double> pvalues;
};

enum class DecisionKind { proceed, stop_success, end_failure };

inline const char* to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::proceed: return "Continue";
    case DecisionKind::stop_success: return "StopSuccess";
    case DecisionKind::end_failure: return "EndFailure";
  }
  return "unknown";
}

struct Decision {
  DecisionKind kind = DecisionKind::proceed;
  std::size_t at = 0;        // decision index of a terminal decision
  double confidence = 0.0;   // 1 - alpha for StopSuccess

  static Decision proceed() { return {}; }
  static Decision stop_success(std::size_t t, double alpha) { return {DecisionKind::stop_success, t, 1.0 - alpha}; }
  static Decision end_failure(std::size_t t) { return {DecisionKind::end_failure, t, 0.0}; }

  bool terminal() const { return kind != DecisionKind::proceed; }
  friend bool operator==(const Decision&, const Decision&) = default;
};

// How the unlimited rule treats hits as its threshold tightens with t.
enum class UnlimitedHitMode {
  // A p-value counts at time t only if it is below the threshold for the
  // current t. Default, and the stricter reading.
  requalify,
  // A p-value that was below the threshold at its own arrival stays counted.
  // Non-default interpretation, kept for experimentation.
  lenient_arrival,
};

class Monitor {
 public:
  // Sentinel for "no p-value supplied" in the ordered update path.
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  explicit Monitor(std::shared_ptr<const TestPlan> plan, UnlimitedHitMode mode = UnlimitedHitMode::requalify)
      : plan_(std::move(plan)), mode_(mode) {
    if (!plan_) throw domain_error("Monitor: null plan");
    require_valid(*plan_);
    ids_ = plan_->criterion_ids();
    criteria_.resize(ids_.size());
    if (plan_->variant == PlanVariant::general_subtests) {
      for (std::size_t i = 0; i < ids_.size(); ++i) {
        criteria_[i].subtest_hits.assign(plan_->subtest_criteria[i].subtests.size(), 0);
      }
    }
  }

  explicit Monitor(TestPlan plan, UnlimitedHitMode mode = UnlimitedHitMode::requalify)
      : Monitor(std::make_shared<const TestPlan>(std::move(plan)), mode) {}

  const TestPlan& plan() const { return *plan_; }
  const std::vector<std::string>& criterion_ids() const { return ids_; }
  std::size_t decision_index() const { return t_; }
  bool terminal() const { return decision_.terminal(); }
  const Decision& decision() const { return decision_; }

  Decision update(const SignificanceRecord& record) {
    std::vector<double> ordered(ids_.size(), kMissing);
    for (const auto& [id, p] : record.pvalues) {
      const auto it = std::find(ids_.begin(), ids_.end(), id);
      if (it == ids_.end()) throw domain_error("record names unknown criterion '" + id + "'");
      ordered[static_cast<std::size_t>(it - ids_.begin())] = p;
    }
    return update(record.decision_index, ordered);
  }

  // p-values in plan criterion order; kMissing where none was observed.
  Decision update(std::size_t t, std::span<const double> pvalues) {
    if (terminal()) throw state_error("monitor already reached " + std::string(to_string(decision_.kind)));
    if (t != t_ + 1) {
      throw sequencing_error("expected decision index " + std::to_string(t_ + 1) + ", got " + std::to_string(t));
    }
    if (pvalues.size() != ids_.size()) throw domain_error("p-value count does not match criterion count");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const double p = pvalues[i];
      if (std::isnan(p)) {
        if (requires_value(i, t)) {
          throw sequencing_error("missing p-value for criterion '" + ids_[i] + "' at decision index " +
                                 std::to_string(t));
        }
      } else if (p < 0.0 || p > 1.0) {
        throw domain_error("p-value for criterion '" + ids_[i] + "' outside [0, 1]");
      }
    }

    t_ = t;
    switch (plan_->variant) {
      case PlanVariant::fixed_once:
      case PlanVariant::fixed_repeated: decision_ = step_fixed(pvalues); break;
      case PlanVariant::unlimited: decision_ = step_unlimited(pvalues); break;
      case PlanVariant::general_subtests: decision_ = step_subtests(pvalues); break;
    }
    return decision_;
  }

  // Hits counted so far: per schedule for fixed plans, current qualifying
  // count for unlimited plans, best subtest for subtest plans.
  std::size_t hits(std::size_t criterion) const {
    const auto& c = criteria_.at(criterion);
    if (plan_->variant == PlanVariant::general_subtests) {
      std::size_t best = 0;
      for (auto h : c.subtest_hits) best = std::max(best, h);
      return best;
    }
    if (plan_->variant == PlanVariant::unlimited && mode_ == UnlimitedHitMode::requalify) {
      return c.qualifying.size();
    }
    return c.hits;
  }

  const std::vector<std::size_t>& subtest_hits(std::size_t criterion) const {
    return criteria_.at(criterion).subtest_hits;
  }

  bool satisfied(std::size_t criterion) const { return criteria_.at(criterion).satisfied; }

  std::map<std::string, std::size_t> hit_requirement_remaining() const {
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const auto& c = criteria_[i];
      std::size_t remaining = 0;
      if (!c.satisfied) {
        switch (plan_->variant) {
          case PlanVariant::fixed_once:
          case PlanVariant::fixed_repeated:
            remaining = floor_sub(plan_->schedules[i].repetitions_required, c.hits);
            break;
          case PlanVariant::unlimited: {
            const auto& u = plan_->unlimited[i].plan;
            const std::size_t at = std::max(t_, u.min_decision_points);
            remaining = floor_sub(ceil_count(u.repetition_rate * static_cast<double>(at)), hits(i));
            break;
          }
          case PlanVariant::general_subtests: {
            remaining = std::numeric_limits<std::size_t>::max();
            const auto& subtests = plan_->subtest_criteria[i].subtests;
            for (std::size_t k = 0; k < subtests.size(); ++k) {
              remaining = std::min(remaining, floor_sub(subtests[k].repetitions_required, c.subtest_hits[k]));
            }
            break;
          }
        }
      }
      out[ids_[i]] = remaining;
    }
    return out;
  }

 private:
  struct CriterionState {
    std::size_t hits = 0;
    bool satisfied = false;
    // Unlimited, requalify mode: hit p-values still below the current
    // threshold. Thresholds only tighten, so evicted values never return.
    std::priority_queue<double> qualifying;
    std::vector<std::size_t> subtest_hits;
  };

  static std::size_t floor_sub(std::size_t a, std::size_t b) { return a > b ? a - b : 0; }

  bool requires_value(std::size_t i, std::size_t t) const {
    if (criteria_[i].satisfied) return false;
    switch (plan_->variant) {
      case PlanVariant::fixed_once:
      case PlanVariant::fixed_repeated: return t <= plan_->schedules[i].num_decision_points;
      case PlanVariant::unlimited: return true;
      case PlanVariant::general_subtests:
        for (const auto& st : plan_->subtest_criteria[i].subtests)
          if (st.covers(t)) return true;
        return false;
    }
    return false;
  }

  bool all_satisfied() const {
    for (const auto& c : criteria_)
      if (!c.satisfied) return false;
    return true;
  }

  Decision step_fixed(std::span<const double> pvalues) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const auto& s = plan_->schedules[i];
      auto& c = criteria_[i];
      if (t_ <= s.num_decision_points && !std::isnan(pvalues[i]) && pvalues[i] <= schedule_threshold(s, t_)) {
        ++c.hits;
      }
      if (c.hits >= s.repetitions_required) c.satisfied = true;
    }
    if (all_satisfied()) return Decision::stop_success(t_, plan_->alpha);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const auto& s = plan_->schedules[i];
      const auto& c = criteria_[i];
      const std::size_t left = s.num_decision_points > t_ ? s.num_decision_points - t_ : 0;
      if (!c.satisfied && c.hits + left < s.repetitions_required) return Decision::end_failure(t_);
    }
    return Decision::proceed();
  }

  Decision step_unlimited(std::span<const double> pvalues) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      auto& c = criteria_[i];
      if (c.satisfied) continue;
      const auto& u = plan_->unlimited[i].plan;
      const double thr = unlimited_threshold(u, t_);
      const double p = pvalues[i];
      std::size_t count;
      if (mode_ == UnlimitedHitMode::requalify) {
        if (p <= thr) c.qualifying.push(p);
        while (!c.qualifying.empty() && c.qualifying.top() > thr) c.qualifying.pop();
        count = c.qualifying.size();
      } else {
        if (p <= thr) ++c.hits;
        count = c.hits;
      }
      if (t_ >= u.min_decision_points && count >= ceil_count(u.repetition_rate * static_cast<double>(t_))) {
        c.satisfied = true;
      }
    }
    if (all_satisfied()) return Decision::stop_success(t_, plan_->alpha);
    return Decision::proceed();
  }

  Decision step_subtests(std::span<const double> pvalues) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      auto& c = criteria_[i];
      const auto& subtests = plan_->subtest_criteria[i].subtests;
      const double p = pvalues[i];
      for (std::size_t k = 0; k < subtests.size(); ++k) {
        const auto& st = subtests[k];
        if (st.covers(t_) && !std::isnan(p) && p <= subtest_threshold(st, t_)) ++c.subtest_hits[k];
        if (c.subtest_hits[k] >= st.repetitions_required) c.satisfied = true;
      }
    }
    if (all_satisfied()) return Decision::stop_success(t_, plan_->alpha);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (criteria_[i].satisfied) continue;
      bool recoverable = false;
      const auto& subtests = plan_->subtest_criteria[i].subtests;
      for (std::size_t k = 0; k < subtests.size() && !recoverable; ++k) {
        const auto& st = subtests[k];
        const std::size_t consumed_to = std::max(t_, st.start_index - 1);
        const std::size_t left = st.end_index > consumed_to ? st.end_index - consumed_to : 0;
        recoverable = criteria_[i].subtest_hits[k] + left >= st.repetitions_required;
      }
      if (!recoverable) return Decision::end_failure(t_);
    }
    return Decision::proceed();
  }

  std::shared_ptr<const TestPlan> plan_;
  UnlimitedHitMode mode_;
  std::vector<std::string> ids_;
  std::vector<CriterionState> criteria_;
  std::size_t t_ = 0;
  Decision decision_;
};

inline Monitor init_monitor(TestPlan plan, UnlimitedHitMode mode = UnlimitedHitMode::requalify) {
  return Monitor(std::move(plan), mode);
}

}  // namespace repsig
