#pragma once

// Partitions of a Type I error budget over criteria, decision points, or
// subtests. Entries are 0-based; plans translate 1-based decision indices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repsig/errors.hpp"

namespace repsig {

namespace detail {

// Nonoverlapping expansion of the exact real sum of the terms, increasing in
// magnitude (Shewchuk expansion growth).
inline std::vector<double> exact_sum_expansion(std::span<const double> terms) {
  std::vector<double> expansion;
  expansion.reserve(terms.size());
  for (double b : terms) {
    double q = b;
    std::size_t kept = 0;
    for (double a : expansion) {
      const double x = q + a;
      const double bv = x - q;
      const double err = (q - (x - bv)) + (a - bv);
      q = x;
      if (err != 0.0) expansion[kept++] = err;
    }
    expansion.resize(kept);
    if (q != 0.0) expansion.push_back(q);
  }
  return expansion;
}

inline int exact_sum_sign(std::span<const double> terms) {
  const auto expansion = exact_sum_expansion(terms);
  if (expansion.empty()) return 0;
  return expansion.back() > 0.0 ? 1 : -1;
}

// Whether head * count + tail <= total holds exactly.
inline bool run_fits(double head, std::size_t count, double tail, double total) {
  const double c = static_cast<double>(count);
  const double prod = head * c;
  const double prod_err = std::fma(head, c, -prod);
  const double terms[] = {prod, prod_err, tail, -total};
  return exact_sum_sign(terms) <= 0;
}

}  // namespace detail

struct GeometricSpendConfig {
  double withdrawal_rate = 0.5;
  std::optional<std::size_t> num_terms;  // nullopt: unbounded
};

struct FinalWeightedConfig {
  double theta = 0.5;
  std::size_t d = 2;
};

class AlphaPartition {
 public:
  enum class Kind { uniform, final_weighted, geometric, explicit_entries };

  // Terms kept in memory for an unbounded geometric partition; later entries
  // are evaluated from the closed form on access.
  static constexpr std::size_t kGeometricMaterialized = 64;
  // Longest uniform run whose count is exact in a double.
  static constexpr std::size_t kMaxRunLength = std::size_t{1} << 53;

  static AlphaPartition uniform(double total, std::size_t n) {
    check_total(total, "uniform_partition");
    if (n == 0) throw domain_error("uniform_partition: n must be >= 1");
    if (n > kMaxRunLength) throw domain_error("uniform_partition: n too large");
    AlphaPartition part(Kind::uniform, total);
    part.head_value_ = total / static_cast<double>(n);
    part.head_count_ = n - 1;
    part.tail_value_ = part.head_value_;
    part.shave_tail();
    return part;
  }

  static AlphaPartition final_weighted(double total, const FinalWeightedConfig& config) {
    check_total(total, "final_weighted_partition");
    if (!(config.theta > 0.0 && config.theta < 1.0)) {
      throw domain_error("final_weighted_partition: theta must lie in (0, 1)");
    }
    if (config.d < 2) throw domain_error("final_weighted_partition: d must be >= 2");
    if (config.d > kMaxRunLength) throw domain_error("final_weighted_partition: d too large");
    AlphaPartition part(Kind::final_weighted, total);
    part.theta_ = config.theta;
    part.head_count_ = config.d - 1;
    part.head_value_ = (1.0 - config.theta) * total / static_cast<double>(config.d - 1);
    part.tail_value_ = config.theta * total;
    part.shave_tail();
    return part;
  }

  static AlphaPartition geometric(double total, const GeometricSpendConfig& config) {
    check_total(total, "geometric_partition");
    const double w = config.withdrawal_rate;
    if (!(w > 0.0 && w < 1.0)) {
      throw domain_error("geometric_partition: withdrawal rate must lie in (0, 1)");
    }
    if (config.num_terms && *config.num_terms == 0) {
      throw domain_error("geometric_partition: num_terms must be >= 1");
    }
    AlphaPartition part(Kind::geometric, total);
    part.rate_ = w;
    part.unbounded_ = !config.num_terms.has_value();
    const std::size_t n = config.num_terms.value_or(kGeometricMaterialized);
    part.entries_.resize(n);
    double factor = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      part.entries_[j] = w * factor * total;
      factor *= 1.0 - w;
    }
    part.shave_explicit();
    return part;
  }

  // The budget of an explicit partition is the sum of its entries; plan
  // validation decides whether that sum fits the overall alpha.
  static AlphaPartition explicit_entries(std::vector<double> entries) {
    if (entries.empty()) throw domain_error("explicit partition: needs at least one entry");
    for (double e : entries) {
      if (!std::isfinite(e) || e < 0.0) {
        throw domain_error("explicit partition: entries must be finite and nonnegative");
      }
    }
    AlphaPartition part(Kind::explicit_entries, 0.0);
    part.entries_ = std::move(entries);
    part.total_ = std::accumulate(part.entries_.begin(), part.entries_.end(), 0.0);
    return part;
  }

  Kind kind() const { return kind_; }
  double total() const { return total_; }
  bool unbounded() const { return unbounded_; }
  double theta() const { return theta_; }
  double withdrawal_rate() const { return rate_; }

  // Number of addressable entries (materialized count when unbounded).
  std::size_t size() const {
    return is_run() ? head_count_ + 1 : entries_.size();
  }

  double operator[](std::size_t j) const {
    if (is_run()) return j < head_count_ ? head_value_ : tail_value_;
    if (j < entries_.size()) return entries_[j];
    if (unbounded_) return rate_ * std::pow(1.0 - rate_, static_cast<double>(j)) * total_;
    return 0.0;
  }

  double at(std::size_t j) const {
    if (j >= size() && !unbounded_) throw domain_error("AlphaPartition: entry index out of range");
    return (*this)[j];
  }

  // Sum of the addressable entries.
  double sum() const {
    if (is_run()) {
      return static_cast<double>(static_cast<long double>(head_value_) * head_count_ + tail_value_);
    }
    return std::accumulate(entries_.begin(), entries_.end(), 0.0);
  }

  // Budget not assigned to any addressable entry (geometric truncation).
  double remainder() const {
    const double r = total_ - sum();
    return r > 0.0 ? r : 0.0;
  }

  std::span<const double> stored_entries() const { return entries_; }

  std::vector<double> materialize() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (*this)[j];
    return out;
  }

 private:
  AlphaPartition(Kind kind, double total) : kind_(kind), total_(total) {}

  static void check_total(double total, const char* what) {
    if (!(total > 0.0 && total < 1.0)) {
      throw domain_error(std::string(what) + ": budget must lie in (0, 1)");
    }
  }

  bool is_run() const { return kind_ == Kind::uniform || kind_ == Kind::final_weighted; }

  // Rounding may push the entry sum above the budget; the final entry gives
  // up the excess so that the exact sum never exceeds it.
  void shave_tail() {
    if (detail::run_fits(head_value_, head_count_, tail_value_, total_)) return;
    const long double room =
        static_cast<long double>(total_) - static_cast<long double>(head_value_) * head_count_;
    tail_value_ = std::min(tail_value_, room > 0.0L ? static_cast<double>(room) : 0.0);
    while (tail_value_ > 0.0 && !detail::run_fits(head_value_, head_count_, tail_value_, total_)) {
      tail_value_ = std::nextafter(tail_value_, 0.0);
    }
    if (!detail::run_fits(head_value_, head_count_, tail_value_, total_)) {
      head_value_ = std::nextafter(head_value_, 0.0);
      tail_value_ = head_value_;
      shave_tail();
    }
  }

  // Exact sum of entries minus total, rounded.
  double entries_excess() const {
    std::vector<double> terms(entries_);
    terms.push_back(-total_);
    const auto expansion = detail::exact_sum_expansion(terms);
    return std::accumulate(expansion.begin(), expansion.end(), 0.0);
  }

  bool entries_fit() const {
    std::vector<double> terms(entries_);
    terms.push_back(-total_);
    return detail::exact_sum_sign(terms) <= 0;
  }

  // Geometric tails can be far below the rounding error of the head, so the
  // excess comes out of the second entry (the first stays w * total).
  void shave_explicit() {
    const std::size_t n = entries_.size();
    for (std::size_t i = 0; i < n && !entries_fit(); ++i) {
      const std::size_t j = (i + 1) % n;
      entries_[j] = std::max(0.0, entries_[j] - entries_excess());
      while (entries_[j] > 0.0 && !entries_fit()) entries_[j] = std::nextafter(entries_[j], 0.0);
    }
  }

  Kind kind_;
  double total_;
  std::size_t head_count_ = 0;
  double head_value_ = 0.0;
  double tail_value_ = 0.0;
  double theta_ = 0.0;
  double rate_ = 0.0;
  bool unbounded_ = false;
  std::vector<double> entries_;
};

inline AlphaPartition uniform_partition(double alpha, std::size_t n) {
  return AlphaPartition::uniform(alpha, n);
}

inline AlphaPartition geometric_partition(double alpha, const GeometricSpendConfig& config) {
  return AlphaPartition::geometric(alpha, config);
}

inline AlphaPartition final_weighted_partition(double alpha, const FinalWeightedConfig& config) {
  return AlphaPartition::final_weighted(alpha, config);
}

inline AlphaPartition explicit_partition(std::vector<double> entries) {
  return AlphaPartition::explicit_entries(std::move(entries));
}

inline const char* to_string(AlphaPartition::Kind kind) {
  switch (kind) {
    case AlphaPartition::Kind::uniform: return "uniform";
    case AlphaPartition::Kind::final_weighted: return "final_weighted";
    case AlphaPartition::Kind::geometric: return "geometric";
    case AlphaPartition::Kind::explicit_entries: return "explicit";
  }
  return "unknown";
}

}  // namespace repsig
