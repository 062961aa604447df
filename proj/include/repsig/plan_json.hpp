#pragma once

// JSON form of plans and plan documents. Parsing is strict: unknown keys are
// rejected so that a committed plan has exactly one reading.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "repsig/alpha_spend.hpp"
#include "repsig/errors.hpp"
#include "repsig/plans.hpp"

namespace repsig {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct PlanDocument {
  int schema_version = kSchemaVersion;
  TestPlan plan;
  json metadata = json::object();
};

namespace detail {

inline void expect_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw parse_error(context + ": expected an object");
}

inline void expect_keys(const json& j, const std::string& context, std::initializer_list<const char*> required,
                        std::initializer_list<const char*> optional = {}) {
  expect_object(j, context);
  for (const char* key : required) {
    if (!j.contains(key)) throw parse_error(context + ": missing key '" + key + "'");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) throw parse_error(context + ": unknown key '" + key + "'");
  }
}

inline double get_number(const json& j, const char* key, const std::string& context) {
  const json& v = j.at(key);
  if (!v.is_number()) throw parse_error(context + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline std::size_t get_count(const json& j, const char* key, const std::string& context) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw parse_error(context + ": '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

inline std::string get_string(const json& j, const char* key, const std::string& context) {
  const json& v = j.at(key);
  if (!v.is_string()) throw parse_error(context + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline json partition_to_json(const AlphaPartition& part) {
  switch (part.kind()) {
    case AlphaPartition::Kind::uniform: return {{"kind", "uniform"}, {"total", part.total()}};
    case AlphaPartition::Kind::final_weighted:
      return {{"kind", "final_weighted"}, {"total", part.total()}, {"theta", part.theta()}};
    case AlphaPartition::Kind::geometric:
      return {{"kind", "geometric"}, {"total", part.total()}, {"withdrawal_rate", part.withdrawal_rate()}};
    case AlphaPartition::Kind::explicit_entries: {
      const auto entries = part.stored_entries();
      return {{"kind", "explicit"}, {"entries", std::vector<double>(entries.begin(), entries.end())}};
    }
  }
  return {};
}

// `size` is the number of decision points the partition must cover.
inline AlphaPartition partition_from_json(const json& j, std::size_t size, const std::string& context) {
  detail::expect_object(j, context);
  if (!j.contains("kind")) throw parse_error(context + ": missing key 'kind'");
  const std::string kind = detail::get_string(j, "kind", context);
  if (kind == "uniform") {
    detail::expect_keys(j, context, {"kind", "total"});
    return AlphaPartition::uniform(detail::get_number(j, "total", context), size);
  }
  if (kind == "final_weighted") {
    detail::expect_keys(j, context, {"kind", "total", "theta"});
    return AlphaPartition::final_weighted(detail::get_number(j, "total", context),
                                          {detail::get_number(j, "theta", context), size});
  }
  if (kind == "geometric") {
    detail::expect_keys(j, context, {"kind", "total", "withdrawal_rate"});
    return AlphaPartition::geometric(detail::get_number(j, "total", context),
                                     {detail::get_number(j, "withdrawal_rate", context), size});
  }
  if (kind == "explicit") {
    detail::expect_keys(j, context, {"kind", "entries"});
    const json& e = j.at("entries");
    if (!e.is_array()) throw parse_error(context + ": 'entries' must be an array");
    std::vector<double> entries;
    for (const auto& v : e) {
      if (!v.is_number()) throw parse_error(context + ": entries must be numbers");
      entries.push_back(v.get<double>());
    }
    return AlphaPartition::explicit_entries(std::move(entries));
  }
  throw parse_error(context + ": unknown partition kind '" + kind + "'");
}

inline json plan_to_json(const TestPlan& plan) {
  json criteria = json::array();
  if (plan.is_fixed()) {
    for (const auto& s : plan.schedules) {
      criteria.push_back({{"id", s.criterion_id},
                          {"decision_points", s.num_decision_points},
                          {"repetitions", s.repetitions_required},
                          {"spending", partition_to_json(s.alpha_entries)}});
    }
  } else if (plan.variant == PlanVariant::unlimited) {
    for (const auto& c : plan.unlimited) {
      criteria.push_back({{"id", c.criterion_id},
                          {"alpha", c.plan.alpha},
                          {"repetition_rate", c.plan.repetition_rate},
                          {"min_decision_points", c.plan.min_decision_points}});
    }
  } else {
    for (const auto& c : plan.subtest_criteria) {
      json subtests = json::array();
      for (const auto& st : c.subtests) {
        subtests.push_back({{"start", st.start_index},
                            {"end", st.end_index},
                            {"repetitions", st.repetitions_required},
                            {"spending", partition_to_json(st.alpha_entries)}});
      }
      criteria.push_back({{"id", c.criterion_id}, {"subtests", subtests}});
    }
  }
  return {{"variant", to_string(plan.variant)}, {"alpha", plan.alpha}, {"criteria", criteria}};
}

inline PlanVariant variant_from_string(const std::string& s) {
  for (auto v : {PlanVariant::fixed_once, PlanVariant::fixed_repeated, PlanVariant::unlimited,
                 PlanVariant::general_subtests}) {
    if (s == to_string(v)) return v;
  }
  throw parse_error("unknown plan variant '" + s + "'");
}

inline TestPlan plan_from_json(const json& j) {
  detail::expect_keys(j, "plan", {"variant", "alpha", "criteria"});
  TestPlan plan;
  plan.variant = variant_from_string(detail::get_string(j, "variant", "plan"));
  plan.alpha = detail::get_number(j, "alpha", "plan");
  const json& criteria = j.at("criteria");
  if (!criteria.is_array()) throw parse_error("plan: 'criteria' must be an array");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const json& c = criteria[i];
    const std::string ctx = "plan.criteria[" + std::to_string(i) + "]";
    if (plan.is_fixed()) {
      detail::expect_keys(c, ctx, {"id", "decision_points", "spending"}, {"repetitions"});
      CriterionSchedule s;
      s.criterion_id = detail::get_string(c, "id", ctx);
      s.num_decision_points = detail::get_count(c, "decision_points", ctx);
      s.repetitions_required = c.contains("repetitions") ? detail::get_count(c, "repetitions", ctx) : 1;
      s.alpha_entries = partition_from_json(c.at("spending"), s.num_decision_points, ctx + ".spending");
      plan.schedules.push_back(std::move(s));
    } else if (plan.variant == PlanVariant::unlimited) {
      detail::expect_keys(c, ctx, {"id", "alpha", "repetition_rate", "min_decision_points"});
      plan.unlimited.push_back({detail::get_string(c, "id", ctx),
                                {detail::get_number(c, "alpha", ctx), detail::get_number(c, "repetition_rate", ctx),
                                 detail::get_count(c, "min_decision_points", ctx)}});
    } else {
      detail::expect_keys(c, ctx, {"id", "subtests"});
      SubtestCriterion sc;
      sc.criterion_id = detail::get_string(c, "id", ctx);
      const json& subtests = c.at("subtests");
      if (!subtests.is_array()) throw parse_error(ctx + ": 'subtests' must be an array");
      for (std::size_t k = 0; k < subtests.size(); ++k) {
        const json& sj = subtests[k];
        const std::string sctx = ctx + ".subtests[" + std::to_string(k) + "]";
        detail::expect_keys(sj, sctx, {"start", "end", "repetitions", "spending"});
        Subtest st;
        st.start_index = detail::get_count(sj, "start", sctx);
        st.end_index = detail::get_count(sj, "end", sctx);
        st.repetitions_required = detail::get_count(sj, "repetitions", sctx);
        if (st.end_index < st.start_index) throw domain_error(sctx + ": end precedes start");
        st.alpha_entries = partition_from_json(sj.at("spending"), st.width(), sctx + ".spending");
        sc.subtests.push_back(std::move(st));
      }
      plan.subtest_criteria.push_back(std::move(sc));
    }
  }
  return plan;
}

inline json document_to_json(const PlanDocument& doc) {
  json j = {{"schema_version", doc.schema_version}, {"plan", plan_to_json(doc.plan)}};
  if (!doc.metadata.empty()) j["metadata"] = doc.metadata;
  return j;
}

inline PlanDocument document_from_json(const json& j) {
  detail::expect_keys(j, "document", {"schema_version", "plan"}, {"metadata"});
  PlanDocument doc;
  const json& version = j.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw parse_error("document: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  doc.plan = plan_from_json(j.at("plan"));
  if (j.contains("metadata")) {
    if (!j.at("metadata").is_object()) throw parse_error("document: 'metadata' must be an object");
    doc.metadata = j.at("metadata");
  }
  return doc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw parse_error("'" + path + "': " + e.what());
  }
}

inline PlanDocument load_plan_document(const std::string& path) { return document_from_json(read_json_file(path)); }

/// Stable identifier of a plan's content (FNV-1a over its canonical JSON).
inline std::string plan_fingerprint(const TestPlan& plan) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : plan_to_json(plan).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace repsig
