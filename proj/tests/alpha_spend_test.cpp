#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "repsig/alpha_spend.hpp"
#include "repsig/stats_core.hpp"

using namespace repsig;

TEST(UniformPartition, Examples) {
  const auto two = uniform_partition(0.05, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], 0.025);
  EXPECT_EQ(two[1], 0.025);

  const auto one = uniform_partition(0.05, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], 0.05);

  const auto twenty = uniform_partition(0.05, 20);
  ASSERT_EQ(twenty.size(), 20u);
  for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(twenty[j], 0.0025, 1e-17);
  EXPECT_EQ(twenty.kind(), AlphaPartition::Kind::uniform);
}

TEST(UniformPartition, Errors) {
  EXPECT_THROW(uniform_partition(0.05, 0), domain_error);
  EXPECT_THROW(uniform_partition(0.0, 3), domain_error);
  EXPECT_THROW(uniform_partition(1.0, 3), domain_error);
}

TEST(UniformPartition, SumNeverExceedsTotal) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> alpha(1e-6, 0.5);
  std::uniform_int_distribution<std::size_t> n(1, 2'000'000);
  for (int i = 0; i < 2000; ++i) {
    const double a = alpha(gen);
    const std::size_t k = n(gen);
    const auto part = uniform_partition(a, k);
    oracle::ExactSum exact;
    exact.add(part[0], part.size() - 1);
    exact.add(part[part.size() - 1]);
    exact.add(-a);
    EXPECT_LE(exact.sign(), 0) << "alpha = " << a << ", n = " << k;
    EXPECT_LE(part.sum(), a);
    EXPECT_NEAR(part.sum(), a, 1e-15);
    EXPECT_GE(part[part.size() - 1], 0.0);
  }
}

TEST(ExactSumOracle, SelfCheck) {
  oracle::ExactSum s;
  s.add(0.1, 10);
  s.add(-1.0);
  EXPECT_EQ(s.sign(), 1);  // ten copies of double(0.1) exceed 1
  oracle::ExactSum z;
  z.add(0.25, 4);
  z.add(-1.0);
  EXPECT_EQ(z.sign(), 0);
  oracle::ExactSum n;
  n.add(1e-300);
  n.add(-2e-300);
  EXPECT_EQ(n.sign(), -1);
}

TEST(UniformPartition, LargeCountStaysCompact) {
  const auto part = uniform_partition(0.05, 10'000'000);
  EXPECT_EQ(part.size(), 10'000'000u);
  EXPECT_TRUE(part.stored_entries().empty());
  EXPECT_LE(part.sum(), 0.05);
}

TEST(GeometricPartition, HalvingSequence) {
  const auto part = geometric_partition(0.05, {0.5, std::nullopt});
  EXPECT_TRUE(part.unbounded());
  EXPECT_EQ(part.size(), AlphaPartition::kGeometricMaterialized);
  EXPECT_EQ(part[0], 0.025);
  EXPECT_EQ(part[1], 0.0125);
  EXPECT_EQ(part[2], 0.00625);
  // Past the materialized terms the closed form continues.
  EXPECT_NEAR(part[100], 0.05 * std::pow(0.5, 101), 1e-40);
  EXPECT_NO_THROW(part.at(1000));
}

TEST(GeometricPartition, TruncatedSumAndRemainder) {
  for (double w : {0.1, 0.25, 0.5, 0.9}) {
    for (std::size_t n : {1u, 2u, 7u, 30u}) {
      const auto part = geometric_partition(0.05, {w, n});
      ASSERT_EQ(part.size(), n);
      EXPECT_EQ(part[0], w * 0.05);
      const double expected = 0.05 * (1.0 - std::pow(1.0 - w, static_cast<double>(n)));
      EXPECT_NEAR(part.sum(), expected, 1e-15);
      oracle::ExactSum exact;
      for (std::size_t j = 0; j < n; ++j) exact.add(part[j]);
      exact.add(-0.05);
      EXPECT_LE(exact.sign(), 0);
      EXPECT_NEAR(part.remainder(), 0.05 - expected, 1e-15);
      for (std::size_t j = 1; j < n; ++j) EXPECT_LT(part[j], part[j - 1]);
      EXPECT_EQ(part[n], 0.0);
      EXPECT_THROW(part.at(n), domain_error);
    }
  }
}

TEST(GeometricPartition, Errors) {
  EXPECT_THROW(geometric_partition(0.05, {0.0, 5}), domain_error);
  EXPECT_THROW(geometric_partition(0.05, {1.0, 5}), domain_error);
  EXPECT_THROW(geometric_partition(0.05, {0.5, 0}), domain_error);
}

TEST(FinalWeightedPartition, EarlyStoppingExample) {
  const auto part = final_weighted_partition(0.05, {0.5, 20});
  ASSERT_EQ(part.size(), 20u);
  EXPECT_EQ(part[19], 0.025);
  for (std::size_t j = 0; j < 19; ++j) EXPECT_NEAR(part[j], 0.025 / 19.0, 1e-18);
  EXPECT_NEAR(part[0], 0.0013158, 1e-7);
  EXPECT_NEAR(z_from_p_two_sided(part[19]), 2.24, 0.01);
  EXPECT_NEAR(z_from_p_two_sided(part[0]), 3.21, 0.01);
  EXPECT_NEAR(z_from_p_two_sided(part[0]), 3.212513537338403, 1e-9);
  EXPECT_LE(part.sum(), 0.05);
  EXPECT_NEAR(part.sum(), 0.05, 1e-15);
}

TEST(FinalWeightedPartition, SumsToBudgetForAnyShare) {
  for (double theta = 0.01; theta < 1.0; theta += 0.07) {
    for (std::size_t d : {2u, 3u, 20u, 999u}) {
      const auto part = final_weighted_partition(0.05, {theta, d});
      oracle::ExactSum exact;
      exact.add(part[0], d - 1);
      exact.add(part[d - 1]);
      exact.add(-0.05);
      EXPECT_LE(exact.sign(), 0);
      EXPECT_NEAR(part.sum(), 0.05, 1e-15);
      std::size_t distinct = 0;
      for (std::size_t j = 0; j + 1 < d; ++j) distinct += part[j] != part[0];
      EXPECT_EQ(distinct, 0u);
    }
  }
}

TEST(FinalWeightedPartition, Errors) {
  EXPECT_THROW(final_weighted_partition(0.05, {0.5, 1}), domain_error);
  EXPECT_THROW(final_weighted_partition(0.05, {0.0, 5}), domain_error);
  EXPECT_THROW(final_weighted_partition(0.05, {1.0, 5}), domain_error);
}

TEST(ExplicitPartition, TotalIsEntrySum) {
  const auto part = explicit_partition({0.01, 0.02, 0.0});
  EXPECT_EQ(part.size(), 3u);
  EXPECT_NEAR(part.total(), 0.03, 1e-17);
  EXPECT_EQ(part.remainder(), 0.0);
  EXPECT_THROW(explicit_partition({}), domain_error);
  EXPECT_THROW(explicit_partition({0.01, -0.001}), domain_error);
  EXPECT_THROW(explicit_partition({std::nan("")}), domain_error);
}

TEST(PartitionKind, Names) {
  EXPECT_STREQ(to_string(AlphaPartition::Kind::uniform), "uniform");
  EXPECT_STREQ(to_string(AlphaPartition::Kind::final_weighted), "final_weighted");
  EXPECT_STREQ(to_string(AlphaPartition::Kind::geometric), "geometric");
  EXPECT_STREQ(to_string(AlphaPartition::Kind::explicit_entries), "explicit");
}
