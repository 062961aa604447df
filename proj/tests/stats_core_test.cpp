#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "repsig/stats_core.hpp"

using namespace repsig;

TEST(StdNormalCdf, MatchesSymmetryAndIntegrationOracle) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  // Simpson oracle gives 0.97500000090; 0.975 to 1e-7.
  EXPECT_NEAR(oracle::simpson_cdf(1.959964), 0.975, 1e-7);
  EXPECT_NEAR(std_normal_cdf(1.959964), 0.975, 1e-7);
  EXPECT_NEAR(std_normal_cdf(1.959964), oracle::simpson_cdf(1.959964), 1e-12);
  EXPECT_NEAR(std_normal_cdf(-3.0), 1.0 - std_normal_cdf(3.0), 1e-15);
}

TEST(StdNormalCdf, MonotoneAndComplementary) {
  double prev = 0.0;
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    const double c = std_normal_cdf(z);
    EXPECT_GE(c, prev);
    EXPECT_NEAR(c + std_normal_cdf(-z), 1.0, 1e-15);
    prev = c;
  }
}

TEST(StdNormalCdf, RejectsNonFinite) {
  EXPECT_THROW(std_normal_cdf(std::numeric_limits<double>::infinity()), domain_error);
  EXPECT_THROW(std_normal_cdf(std::nan("")), domain_error);
}

TEST(StdNormalQuantile, AgreesWithIntegrationOracleOnGrid) {
  for (int i = 1; i <= 20; ++i) {
    const double p = i / 21.0;
    EXPECT_NEAR(std_normal_quantile(p), oracle::simpson_quantile(p), 1e-9) << "p = " << p;
  }
  for (double p : {1e-6, 1e-4, 0.001, 0.999, 0.9999}) {
    EXPECT_NEAR(std_normal_quantile(p), oracle::simpson_quantile(p), 1e-9) << "p = " << p;
  }
  EXPECT_NEAR(std_normal_quantile(0.975), 1.9599639845, 1e-7);
  EXPECT_THROW(std_normal_quantile(0.0), domain_error);
  EXPECT_THROW(std_normal_quantile(1.0), domain_error);
}

TEST(TwoSided, QuotedAnchors) {
  EXPECT_NEAR(z_from_p_two_sided(0.05), 1.96, 0.01);
  EXPECT_NEAR(z_from_p_two_sided(0.0025), 3.02, 0.01);
  EXPECT_EQ(z_from_p_two_sided(1.0), 0.0);
  EXPECT_FALSE(std::signbit(z_from_p_two_sided(1.0)));
  EXPECT_EQ(p_from_z_two_sided(0.0), 1.0);
  EXPECT_NEAR(p_from_z_two_sided(3.02), 0.0025, 0.0001);
  EXPECT_NEAR(p_from_z_two_sided(z_from_p_two_sided(0.0123)), 0.0123, 1e-9);
}

TEST(TwoSided, DomainErrors) {
  EXPECT_THROW(z_from_p_two_sided(0.0), domain_error);
  EXPECT_THROW(z_from_p_two_sided(-0.1), domain_error);
  EXPECT_THROW(z_from_p_two_sided(1.0000001), domain_error);
  EXPECT_THROW(p_from_z_two_sided(-1e-9), domain_error);
  EXPECT_EQ(p_from_z_two_sided(std::numeric_limits<double>::infinity()), 0.0);
}

TEST(TwoSided, RoundTripProperty) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> log_p(std::log(1e-12), 0.0);
  for (int i = 0; i < 5000; ++i) {
    const double p = std::exp(log_p(gen));
    const double back = p_from_z_two_sided(z_from_p_two_sided(p));
    EXPECT_NEAR(back / p, 1.0, 1e-9) << "p = " << p;
  }
  EXPECT_NEAR(p_from_z_two_sided(z_from_p_two_sided(1e-12)) / 1e-12, 1.0, 1e-9);
}

TEST(TwoSided, StrictlyDecreasingInP) {
  double prev = std::numeric_limits<double>::infinity();
  for (double p = 1e-10; p <= 1.0; p *= 1.5) {
    const double z = z_from_p_two_sided(p);
    EXPECT_LT(z, prev);
    prev = z;
  }
}

TEST(RequiredZ, UniformAnchorsAndShape) {
  EXPECT_NEAR(required_z_uniform(0.05, 1), 1.96, 0.01);
  EXPECT_NEAR(required_z_uniform(0.05, 20), 3.02, 0.01);
  EXPECT_NEAR(required_z_uniform(0.05, 2), 2.24, 0.01);
  for (double alpha : {0.10, 0.05, 0.01}) {
    double prev_z = required_z_uniform(alpha, 1);
    double prev_step = std::numeric_limits<double>::infinity();
    for (std::uint64_t dm = 2; dm <= 100; ++dm) {
      const double z = required_z_uniform(alpha, dm);
      EXPECT_GT(z, prev_z);
      EXPECT_LT(z - prev_z, prev_step);  // decreasing marginal increases
      prev_step = z - prev_z;
      prev_z = z;
    }
  }
  EXPECT_THROW(required_z_uniform(0.05, 0), domain_error);
  EXPECT_THROW(required_z_uniform(1.0, 3), domain_error);
}

TEST(RequiredZ, ByRate) {
  EXPECT_NEAR(required_z_by_rate(0.05, 0.05), 3.02, 0.01);
  EXPECT_EQ(required_z_by_rate(0.05, 1.0), z_from_p_two_sided(0.05));
  EXPECT_NEAR(required_z_by_rate(0.01, 0.05), required_z_uniform(0.01, 20), 1e-12);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 100; ++k) {
    const double u = k / 100.0;
    const double z = required_z_by_rate(0.05, u);
    EXPECT_LT(z, prev);
    EXPECT_NEAR(z, z_from_p_two_sided(0.05 * u), 1e-12);
    prev = z;
  }
  EXPECT_THROW(required_z_by_rate(0.05, 0.0), domain_error);
  EXPECT_THROW(required_z_by_rate(0.05, 1.5), domain_error);
}

TEST(SampleSizeRatio, QuotedRatios) {
  EXPECT_NEAR(sample_size_ratio(1.96, 3.02), 0.421209596070348, 1e-14);
  EXPECT_NEAR(sample_size_ratio(1.96, 2.24), 0.77, 0.02);
  EXPECT_NEAR(sample_size_ratio(3.21, 3.02), 1.13, 0.02);
  EXPECT_EQ(sample_size_ratio(2.5, 2.5), 1.0);
  EXPECT_THROW(sample_size_ratio(0.0, 1.0), domain_error);
  EXPECT_THROW(sample_size_ratio(1.0, -2.0), domain_error);
}

TEST(AlwaysValid, ClosedFormAtFirstObservation) {
  const double expected = std::sqrt((2.0 * 2.0 / 1.0) * std::log(std::sqrt(2.0) / 0.05));
  EXPECT_NEAR(always_valid_z({1.0, 0.05, 1}), expected, 1e-14);
  EXPECT_NEAR(always_valid_z({1.0, 0.05, 1}), 3.6563948713638483, 1e-12);
}

TEST(AlwaysValid, ParamValidation) {
  EXPECT_THROW(always_valid_z({0.0, 0.05, 10}), domain_error);
  EXPECT_THROW(always_valid_z({1.0, 1.0, 10}), domain_error);
  EXPECT_THROW(always_valid_z({1.0, 0.05, 0}), domain_error);
}

TEST(AlwaysValid, ArgminShiftsRightAsRhoDecreases) {
  const auto wide = oracle::always_valid_grid_min(1e-2, 0.05, 1e8);
  const auto narrow = oracle::always_valid_grid_min(1e-3, 0.05, 1e8);
  EXPECT_GT(narrow.t, wide.t);
  // Same minimum value; rho only moves where it is reached.
  EXPECT_NEAR(narrow.z, wide.z, 1e-4);
}

TEST(AlwaysValid, UnimodalInT) {
  const double rho = 1e-3;
  bool rising = false;
  double prev = always_valid_z({rho, 0.05, 1});
  for (std::uint64_t t = 2; t < 100'000'000; t = t * 11 / 10 + 1) {
    const double z = always_valid_z({rho, 0.05, t});
    if (z > prev) rising = true;
    if (rising) {
      EXPECT_GE(z, prev - 1e-12) << "t = " << t;
    }
    prev = z;
  }
  EXPECT_TRUE(rising);
}

TEST(AlwaysValid, RhoForMinimumMatchesGridSearch) {
  const double horizon = 2e5;
  const double rho = always_valid_rho_for_minimum_at(horizon, 0.05);
  const auto grid = oracle::always_valid_grid_min(rho, 0.05, 1e7, 20000);
  EXPECT_NEAR(std::log(grid.t), std::log(horizon), 0.01);
  EXPECT_NEAR(always_valid_z({rho, 0.05, static_cast<std::uint64_t>(horizon)}), grid.z, 1e-6);
}
