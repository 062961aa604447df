#include <gtest/gtest.h>

#include <sstream>

#include "repsig/csv.hpp"
#include "repsig/curves.hpp"
#include "repsig/plan_json.hpp"

using namespace repsig;

namespace {

std::vector<TestPlan> sample_plans() {
  std::vector<TestPlan> plans;
  plans.push_back(make_uniform_plan(0.05, 20));
  plans.push_back(make_uniform_plan(0.05, 10, 2, 3));
  auto weighted = make_uniform_plan(0.05, 20);
  weighted.schedules[0].alpha_entries = final_weighted_partition(0.05, {0.5, 20});
  plans.push_back(weighted);
  auto geometric = make_uniform_plan(0.05, 12);
  geometric.schedules[0].alpha_entries = geometric_partition(0.05, {0.3, 12});
  plans.push_back(geometric);
  auto explicit_plan = make_uniform_plan(0.05, 3);
  explicit_plan.schedules[0].alpha_entries = explicit_partition({0.01, 0.015, 0.025});
  plans.push_back(explicit_plan);
  plans.push_back(make_unlimited_plan(0.05, 0.05, 100));
  plans.push_back(make_canonical_subtest_plan({0.05, 0.05, 10}, 4));
  return plans;
}

PValueLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_pvalue_log(in);
}

}  // namespace

TEST(PlanJson, RoundTripsLosslessly) {
  for (const auto& plan : sample_plans()) {
    PlanDocument doc;
    doc.plan = plan;
    doc.metadata = {{"experiment", "checkout button"}, {"owner", "growth"}};
    const json first = document_to_json(doc);
    const PlanDocument back = document_from_json(json::parse(first.dump()));
    EXPECT_EQ(document_to_json(back), first);
    EXPECT_EQ(plan_fingerprint(back.plan), plan_fingerprint(plan));
    const auto ids = plan.criterion_ids();
    for (const auto& id : ids) {
      const std::size_t top = plan.bounded() ? plan.horizon() : 500;
      for (std::size_t t = 1; t <= top; t += 7) {
        if (plan.is_fixed() && t > plan.schedules[detail::find_criterion(plan, id)].num_decision_points) continue;
        EXPECT_EQ(threshold(back.plan, id, t), threshold(plan, id, t));
      }
    }
  }
}

TEST(PlanJson, RejectsUnknownAndMissingKeys) {
  const json good = document_to_json({kSchemaVersion, make_uniform_plan(0.05, 20), json::object()});
  auto extra = good;
  extra["plan"]["criteria"][0]["note"] = "x";
  EXPECT_THROW(document_from_json(extra), parse_error);
  auto top = good;
  top["owner"] = "me";
  EXPECT_THROW(document_from_json(top), parse_error);
  auto missing = good;
  missing["plan"].erase("alpha");
  EXPECT_THROW(document_from_json(missing), parse_error);
  auto version = good;
  version["schema_version"] = 2;
  EXPECT_THROW(document_from_json(version), parse_error);
  auto variant = good;
  variant["plan"]["variant"] = "sometimes";
  EXPECT_THROW(document_from_json(variant), parse_error);
  auto kind = good;
  kind["plan"]["criteria"][0]["spending"]["kind"] = "pocock";
  EXPECT_THROW(document_from_json(kind), parse_error);
  auto type = good;
  type["plan"]["criteria"][0]["decision_points"] = "20";
  EXPECT_THROW(document_from_json(type), parse_error);
}

TEST(PlanJson, RepetitionsDefaultToOne) {
  const json j = json::parse(R"({"variant":"fixed_once","alpha":0.05,"criteria":[
      {"id":"conv","decision_points":4,"spending":{"kind":"uniform","total":0.05}}]})");
  const auto plan = plan_from_json(j);
  EXPECT_EQ(plan.schedules[0].repetitions_required, 1u);
  EXPECT_TRUE(validate_plan(plan).ok());
}

TEST(PlanJson, FingerprintChangesWithContent) {
  EXPECT_NE(plan_fingerprint(make_uniform_plan(0.05, 20)), plan_fingerprint(make_uniform_plan(0.05, 21)));
  EXPECT_EQ(plan_fingerprint(make_uniform_plan(0.05, 20)).rfind("fnv1a64:", 0), 0u);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.0025), "0.0025");
  EXPECT_EQ(format_number(1.5625e-4), "0.00015625");
  EXPECT_EQ(format_number(20.0), "20");
  EXPECT_EQ(format_number(200000.0), "200000");
  EXPECT_EQ(format_number(-0.0), "-0");
  EXPECT_EQ(format_number(1e300), "1e+300");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  const double x = 3.023341439739147;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(PValueLog, ParsesRecords) {
  const auto log = parse("t,criterion_id,p\n1,a,0.5\n1,b,0.25\n2,a,0.001\n\n2,b,1\n3,a,0\n");
  ASSERT_EQ(log.records.size(), 3u);
  EXPECT_EQ(log.records[0].pvalues.at("b"), 0.25);
  EXPECT_EQ(log.records[1].decision_index, 2u);
  EXPECT_EQ(log.records[2].pvalues.size(), 1u);
  EXPECT_EQ(log.first_line[1], 4u);
}

TEST(PValueLog, EmptyBodyIsAllowed) {
  EXPECT_TRUE(parse("t,criterion_id,p\n").records.empty());
  EXPECT_TRUE(parse("").records.empty());
}

TEST(PValueLog, FormatErrors) {
  auto format_error = [](const std::string& text, std::size_t line) {
    try {
      parse(text);
    } catch (const log_error& e) {
      EXPECT_FALSE(e.sequencing()) << text;
      EXPECT_EQ(e.line(), line) << text;
      return;
    }
    ADD_FAILURE() << "no error for " << text;
  };
  format_error("time,id,p\n", 1);
  format_error("t,criterion_id,p\n1,a\n", 2);
  format_error("t,criterion_id,p\n1,a,0.1,9\n", 2);
  format_error("t,criterion_id,p\n0,a,0.1\n", 2);
  format_error("t,criterion_id,p\nx,a,0.1\n", 2);
  format_error("t,criterion_id,p\n1,a,1.5\n", 2);
  format_error("t,criterion_id,p\n1,a,-0.1\n", 2);
  format_error("t,criterion_id,p\n1,a,nan\n", 2);
  format_error("t,criterion_id,p\n1,,0.1\n", 2);
}

TEST(PValueLog, SequencingErrors) {
  auto sequencing_error_at = [](const std::string& text, std::size_t line) {
    try {
      parse(text);
    } catch (const log_error& e) {
      EXPECT_TRUE(e.sequencing()) << text;
      EXPECT_EQ(e.line(), line) << text;
      return;
    }
    ADD_FAILURE() << "no error for " << text;
  };
  sequencing_error_at("t,criterion_id,p\n2,a,0.1\n", 2);
  sequencing_error_at("t,criterion_id,p\n1,a,0.1\n2,a,0.1\n1,b,0.1\n", 4);
  sequencing_error_at("t,criterion_id,p\n1,a,0.1\n3,a,0.1\n", 3);
  sequencing_error_at("t,criterion_id,p\n1,a,0.1\n1,a,0.2\n", 3);
  sequencing_error_at("t,criterion_id,p\n1,a,0.1\n2,a,0.1\n2,b,0.1\n", 4);
}

TEST(Curves, ZByDecisionCount) {
  const auto table = z_by_dm_curve(default_curve_alphas(), 100);
  ASSERT_EQ(table.header.size(), 4u);
  EXPECT_EQ(table.header[2], "z_alpha_0.05");
  ASSERT_EQ(table.rows.size(), 100u);
  EXPECT_EQ(table.rows[19][0], 20.0);
  EXPECT_NEAR(table.rows[19][2], 3.02, 0.01);
  EXPECT_NEAR(table.rows[1][2], 2.24, 0.01);
  EXPECT_NEAR(table.rows[0][2], 1.96, 0.01);
}

TEST(Curves, SizeRatioByP) {
  const auto table = z_and_size_by_p_curve();
  ASSERT_EQ(table.rows.size(), 50u);
  EXPECT_EQ(table.rows.back()[0], 0.05);
  EXPECT_EQ(table.rows.back()[2], 1.0);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    EXPECT_LT(table.rows[i][1], table.rows[i - 1][1]);
    EXPECT_GT(table.rows[i][2], table.rows[i - 1][2]);
  }
}

TEST(Curves, ZByRate) {
  const auto table = z_by_rate_curve(default_curve_alphas());
  ASSERT_EQ(table.rows.size(), 100u);
  EXPECT_EQ(table.rows.back()[0], 1.0);
  EXPECT_NEAR(table.rows.back()[2], 1.96, 0.01);
  EXPECT_NEAR(table.rows[4][2], 3.02, 0.01);
}

TEST(Curves, AlwaysValidComparison) {
  const auto counts = log_spaced_counts(200000, 50);
  EXPECT_EQ(counts.front(), 1u);
  EXPECT_EQ(counts.back(), 200000u);
  for (std::size_t i = 1; i < counts.size(); ++i) EXPECT_GT(counts[i], counts[i - 1]);
  const double rho = always_valid_rho_for_minimum_at(200000.0, 0.05);
  const auto table = always_valid_vs_repetition_curve(rho, 0.05, 0.05, 200000, 50);
  EXPECT_EQ(table.header[1], "z_always_valid");
  for (const auto& row : table.rows) {
    EXPECT_GE(row[1], 3.035);
    EXPECT_NEAR(row[2], 3.0233, 1e-4);
  }
  std::ostringstream out;
  write_csv(out, table);
  EXPECT_EQ(out.str().rfind("t,z_always_valid,z_repetition\n1,", 0), 0u);
}
