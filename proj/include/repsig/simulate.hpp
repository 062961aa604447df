#pragma once

// Monte Carlo harness: observation streams -> running Z-test p-values ->
// monitor, aggregated into stop rates and stopping-time summaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "repsig/errors.hpp"
#include "repsig/monitor.hpp"
#include "repsig/plan_json.hpp"
#include "repsig/plans.hpp"
#include "repsig/rng.hpp"
#include "repsig/stats_core.hpp"

namespace repsig {

struct GaussianModel {
  double mu = 0.0;
  double sigma = 1.0;
};

// Each observation is X - Y with X ~ Bernoulli(q), Y ~ Bernoulli(baseline):
// one difference stream standing in for a test/control pair.
struct BernoulliDiffModel {
  double q = 0.5;
  double baseline = 0.5;
};

// Every observation equals `value` (degenerate samples).
struct ConstantModel {
  double value = 0.0;
};

using ObservationModel = std::variant<GaussianModel, BernoulliDiffModel, ConstantModel>;

struct StreamConfig {
  ObservationModel distribution = GaussianModel{};
  std::size_t n_max = 0;
  std::size_t decision_every = 1;
  std::uint64_t seed = 0;

  std::size_t decision_points() const { return decision_every ? n_max / decision_every : 0; }
};

inline void validate(const StreamConfig& stream) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GaussianModel>) {
          if (!(m.sigma > 0.0) || !std::isfinite(m.mu)) throw config_error("gaussian stream: need sigma > 0");
        } else if constexpr (std::is_same_v<M, BernoulliDiffModel>) {
          if (!(m.q > 0.0 && m.q < 1.0) || !(m.baseline > 0.0 && m.baseline < 1.0)) {
            throw config_error("bernoulli_diff stream: q and baseline must lie in (0, 1)");
          }
        } else {
          if (!std::isfinite(m.value)) throw config_error("constant stream: value must be finite");
        }
      },
      stream.distribution);
  if (stream.decision_every < 1) throw config_error("stream: decision_every must be >= 1");
  if (stream.decision_every < 2) {
    throw config_error("stream: the first decision point needs at least 2 observations (decision_every >= 2)");
  }
  if (stream.n_max < stream.decision_every) throw config_error("stream: n_max must be >= decision_every");
}

inline double draw(const ObservationModel& model, StreamRng& rng) {
  return std::visit(
      [&rng](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GaussianModel>) {
          return m.mu + m.sigma * rng.normal();
        } else if constexpr (std::is_same_v<M, BernoulliDiffModel>) {
          const double x = rng.bernoulli(m.q) ? 1.0 : 0.0;
          const double y = rng.bernoulli(m.baseline) ? 1.0 : 0.0;
          return x - y;
        } else {
          return m.value;
        }
      },
      model);
}

// Welford's online mean and variance.
class RunningStats {
 public:
  void push(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// One-sample two-sided Z statistic of the running mean against zero.
/// A zero-variance sample gives +inf when the mean is nonzero and 0 otherwise.
inline double running_z(const RunningStats& stats) {
  if (stats.count() < 2) throw domain_error("running_z: need at least 2 observations");
  const double sd = stats.sd();
  if (!(sd > 0.0)) return stats.mean() != 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::fabs(stats.mean()) * std::sqrt(static_cast<double>(stats.count())) / sd;
}

inline double running_pvalue(const RunningStats& stats) { return p_from_z_two_sided(running_z(stats)); }

/// Observations needed for the running mean to reach score z: ceil(z^2 (sigma/mu)^2).
inline std::uint64_t required_n_for_z(double z, double mu, double sigma) {
  if (!(z > 0.0) || !std::isfinite(z)) throw domain_error("required_n_for_z: z must be positive");
  if (mu == 0.0 || !std::isfinite(mu)) throw domain_error("required_n_for_z: mu = 0 needs infinitely many observations");
  if (!(sigma > 0.0)) throw domain_error("required_n_for_z: sigma must be positive");
  const double ratio = sigma / mu;
  return static_cast<std::uint64_t>(std::ceil(z * z * ratio * ratio));
}

struct TrialOutcome {
  DecisionKind kind = DecisionKind::proceed;
  std::size_t at = 0;
};

struct StopTimeSummary {
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

struct SimulationReport {
  std::size_t trials = 0;
  std::size_t stop_count = 0;
  std::size_t failure_count = 0;
  std::size_t continue_count = 0;
  double stop_rate = 0.0;
  std::pair<double, double> stop_rate_ci{0.0, 0.0};
  std::optional<StopTimeSummary> stop_time;
  std::map<std::size_t, std::size_t> stop_histogram;  // decision index -> stops
  StreamConfig config;
  std::uint64_t seed = 0;
  std::size_t decision_points = 0;
  std::string plan_hash;
  std::string rng_algorithm = kRngAlgorithm;
};

struct PairedReport {
  SimulationReport repetition;
  SimulationReport always_valid;
  AlwaysValidParams params;
  std::size_t both_stopped = 0;
  std::size_t repetition_first = 0;  // both stopped, repetition earlier
  std::size_t always_valid_first = 0;
};

/// alpha + 3 standard errors of a Bernoulli(alpha) rate over `trials`.
inline double type_one_bound(double alpha, std::size_t trials) {
  return alpha + 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(trials));
}

namespace detail {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline SimulationReport aggregate(const std::vector<TrialOutcome>& outcomes) {
  SimulationReport r;
  r.trials = outcomes.size();
  std::vector<double> times;
  for (const auto& o : outcomes) {
    switch (o.kind) {
      case DecisionKind::stop_success:
        ++r.stop_count;
        ++r.stop_histogram[o.at];
        times.push_back(static_cast<double>(o.at));
        break;
      case DecisionKind::end_failure: ++r.failure_count; break;
      case DecisionKind::proceed: ++r.continue_count; break;
    }
  }
  const double n = static_cast<double>(r.trials);
  r.stop_rate = static_cast<double>(r.stop_count) / n;
  const double half = z_from_p_two_sided(0.05) * std::sqrt(r.stop_rate * (1.0 - r.stop_rate) / n);
  r.stop_rate_ci = {std::max(0.0, r.stop_rate - half), std::min(1.0, r.stop_rate + half)};
  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    StopTimeSummary s;
    double total = 0.0;
    for (double t : times) total += t;
    s.mean = total / static_cast<double>(times.size());
    s.median = quantile_sorted(times, 0.5);
    s.q05 = quantile_sorted(times, 0.05);
    s.q25 = quantile_sorted(times, 0.25);
    s.q75 = quantile_sorted(times, 0.75);
    s.q95 = quantile_sorted(times, 0.95);
    s.min = static_cast<std::size_t>(times.front());
    s.max = static_cast<std::size_t>(times.back());
    r.stop_time = s;
  }
  return r;
}

struct TrialPair {
  TrialOutcome repetition;
  TrialOutcome always_valid;
};

inline std::size_t check_run(const TestPlan& plan, const StreamConfig& stream, std::size_t trials) {
  if (trials < 1) throw config_error("trials must be >= 1");
  validate(stream);
  require_valid(plan);
  const std::size_t points = stream.decision_points();
  if (plan.bounded() && plan.horizon() > points) {
    throw config_error("plan needs " + std::to_string(plan.horizon()) + " decision points but the stream provides " +
                       std::to_string(points) + " (n_max / decision_every)");
  }
  return plan.bounded() ? plan.horizon() : points;
}

inline TrialPair run_one_trial(const std::shared_ptr<const TestPlan>& plan, const StreamConfig& stream,
                               std::size_t points, std::uint64_t seed, std::uint64_t trial,
                               const std::optional<AlwaysValidParams>& av) {
  Monitor monitor(plan);
  const std::size_t m = monitor.criterion_ids().size();
  std::vector<StreamRng> rngs;
  rngs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) rngs.emplace_back(seed, trial, i);
  std::vector<RunningStats> stats(m);
  std::vector<double> pvalues(m);
  TrialPair out;
  bool av_done = !av.has_value();
  for (std::size_t t = 1; t <= points; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < stream.decision_every; ++j) stats[i].push(draw(stream.distribution, rngs[i]));
      pvalues[i] = running_pvalue(stats[i]);
    }
    if (!monitor.terminal()) {
      const Decision d = monitor.update(t, pvalues);
      if (d.terminal()) out.repetition = {d.kind, d.at};
    }
    if (!av_done) {
      AlwaysValidParams params = *av;
      params.t = stats[0].count();
      if (running_z(stats[0]) >= always_valid_z(params)) {
        out.always_valid = {DecisionKind::stop_success, t};
        av_done = true;
      }
    }
    if (monitor.terminal() && av_done) break;
  }
  return out;
}

inline std::vector<TrialPair> run_all(const TestPlan& plan, const StreamConfig& stream, std::size_t trials,
                                      std::uint64_t seed, std::size_t threads, std::size_t points,
                                      const std::optional<AlwaysValidParams>& av) {
  auto shared = std::make_shared<const TestPlan>(plan);
  std::vector<TrialPair> results(trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, trials);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t worker) {
    try {
      for (std::size_t i = worker; i < trials; i += threads) {
        results[i] = run_one_trial(shared, stream, points, seed, i, av);
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

inline void stamp(SimulationReport& r, const TestPlan& plan, const StreamConfig& stream, std::uint64_t seed,
                  std::size_t points) {
  r.config = stream;
  r.seed = seed;
  r.decision_points = points;
  r.plan_hash = plan_fingerprint(plan);
}

}  // namespace detail

/// Runs `trials` independent streams through a monitor for `plan`. Trial i
/// draws only from substreams keyed by (seed, i), so the report is identical
/// for any thread count.
inline SimulationReport run_trials(const TestPlan& plan, const StreamConfig& stream, std::size_t trials,
                                   std::uint64_t seed, std::size_t threads = 0) {
  const std::size_t points = detail::check_run(plan, stream, trials);
  const auto results = detail::run_all(plan, stream, trials, seed, threads, points, std::nullopt);
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(results.size());
  for (const auto& r : results) outcomes.push_back(r.repetition);
  SimulationReport report = detail::aggregate(outcomes);
  detail::stamp(report, plan, stream, seed, points);
  return report;
}

/// Runs the repeated-significance monitor and the continuous-monitoring
/// comparator on the same streams. The comparator is checked at every
/// decision boundary against its bound at the observation count so far.
inline PairedReport compare_always_valid(const TestPlan& plan, AlwaysValidParams params, const StreamConfig& stream,
                                         std::size_t trials, std::uint64_t seed, std::size_t threads = 0) {
  validate(params);
  if (plan.num_criteria() != 1) throw config_error("compare_always_valid: plan must have exactly one criterion");
  // The comparator runs over the whole stream, so use every available point.
  detail::check_run(plan, stream, trials);
  const std::size_t points = stream.decision_points();
  const auto results = detail::run_all(plan, stream, trials, seed, threads, points, params);
  std::vector<TrialOutcome> rep;
  std::vector<TrialOutcome> av;
  PairedReport out;
  out.params = params;
  for (const auto& r : results) {
    rep.push_back(r.repetition);
    av.push_back(r.always_valid);
    if (r.repetition.kind == DecisionKind::stop_success && r.always_valid.kind == DecisionKind::stop_success) {
      ++out.both_stopped;
      if (r.repetition.at < r.always_valid.at) ++out.repetition_first;
      if (r.always_valid.at < r.repetition.at) ++out.always_valid_first;
    }
  }
  out.repetition = detail::aggregate(rep);
  out.always_valid = detail::aggregate(av);
  detail::stamp(out.repetition, plan, stream, seed, points);
  detail::stamp(out.always_valid, plan, stream, seed, points);
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json stream_to_json(const StreamConfig& s) {
  json dist = std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GaussianModel>) {
          return {{"kind", "gaussian"}, {"mu", m.mu}, {"sigma", m.sigma}};
        } else if constexpr (std::is_same_v<M, BernoulliDiffModel>) {
          return {{"kind", "bernoulli_diff"}, {"q", m.q}, {"baseline", m.baseline}};
        } else {
          return {{"kind", "constant"}, {"value", m.value}};
        }
      },
      s.distribution);
  return {{"distribution", dist}, {"n_max", s.n_max}, {"decision_every", s.decision_every}, {"seed", s.seed}};
}

inline StreamConfig stream_from_json(const json& j) {
  detail::expect_keys(j, "stream", {"distribution", "n_max", "decision_every"}, {"seed"});
  StreamConfig s;
  const json& d = j.at("distribution");
  detail::expect_object(d, "stream.distribution");
  if (!d.contains("kind")) throw parse_error("stream.distribution: missing key 'kind'");
  const std::string kind = detail::get_string(d, "kind", "stream.distribution");
  if (kind == "gaussian") {
    detail::expect_keys(d, "stream.distribution", {"kind", "mu", "sigma"});
    s.distribution = GaussianModel{detail::get_number(d, "mu", "stream.distribution"),
                                   detail::get_number(d, "sigma", "stream.distribution")};
  } else if (kind == "bernoulli_diff") {
    detail::expect_keys(d, "stream.distribution", {"kind", "q", "baseline"});
    s.distribution = BernoulliDiffModel{detail::get_number(d, "q", "stream.distribution"),
                                        detail::get_number(d, "baseline", "stream.distribution")};
  } else if (kind == "constant") {
    detail::expect_keys(d, "stream.distribution", {"kind", "value"});
    s.distribution = ConstantModel{detail::get_number(d, "value", "stream.distribution")};
  } else {
    throw parse_error("stream.distribution: unknown kind '" + kind + "'");
  }
  s.n_max = detail::get_count(j, "n_max", "stream");
  s.decision_every = detail::get_count(j, "decision_every", "stream");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw parse_error("stream: 'seed' must be an unsigned integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  return s;
}

inline json report_to_json(const SimulationReport& r) {
  json j = {{"trials", r.trials},
            {"stop_count", r.stop_count},
            {"end_failure_count", r.failure_count},
            {"continue_count", r.continue_count},
            {"stop_rate", r.stop_rate},
            {"stop_rate_ci", {r.stop_rate_ci.first, r.stop_rate_ci.second}},
            {"decision_points", r.decision_points},
            {"seed", r.seed},
            {"stream", stream_to_json(r.config)},
            {"plan_hash", r.plan_hash},
            {"rng", r.rng_algorithm}};
  if (r.stop_time) {
    const auto& s = *r.stop_time;
    j["stop_time"] = {{"mean", s.mean}, {"median", s.median}, {"q05", s.q05}, {"q25", s.q25},
                      {"q75", s.q75},   {"q95", s.q95},       {"min", s.min}, {"max", s.max}};
  } else {
    j["stop_time"] = nullptr;
  }
  return j;
}

inline json paired_report_to_json(const PairedReport& r) {
  return {{"repetition", report_to_json(r.repetition)},
          {"always_valid", report_to_json(r.always_valid)},
          {"always_valid_params", {{"rho", r.params.rho}, {"alpha", r.params.alpha}}},
          {"both_stopped", r.both_stopped},
          {"repetition_first", r.repetition_first},
          {"always_valid_first", r.always_valid_first}};
}

}  // namespace repsig
