// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "bgg/oracle.hpp"

namespace {

using bgg::GameParams;
using bgg::Mode;
using bgg::OracleMethod;
using bgg::ReservePolicy;

GameParams symmetric4() {
  GameParams p;
  p.total_nodes = 4;
  return p;
}

// Frozen from an exact rational solve of the 3x3 lattice (M = 4, all rates 1).
constexpr double kSymmetricBurst = 11.0 / 32.0;
constexpr double kSymmetricZeta09 = 77225.0 / 302526.0;
constexpr double kPreExit[3] = {5.0 / 14.0, 11.0 / 42.0, 8.0 / 21.0};

TEST(IncrementLaw, ClosedForm) {
  const auto p = symmetric4();
  EXPECT_NEAR(bgg::increment_pmf(p, 0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(bgg::increment_pmf(p, 2, 1), 3.0 / 81.0, 1e-15);
  double total = 0.0;
  for (int x = 0; x < 80; ++x)
    for (int y = 0; x + y < 80; ++y) total += bgg::increment_pmf(p, x, y);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(BurstOracle, SymmetricGolden) {
  const auto p = symmetric4();
  EXPECT_NEAR(bgg::oracle_burst_probability(p, 0).value, kSymmetricBurst, 1e-14);
  EXPECT_NEAR(bgg::oracle_burst_probability(p, 0, OracleMethod::value_iteration).value,
              kSymmetricBurst, 1e-10);
}

TEST(BurstOracle, DegenerateRates) {
  auto p = symmetric4();
  p.attacker_rate = 0.0;
  EXPECT_EQ(bgg::oracle_burst_probability(p, 0).value, 0.0);
  // Truncated mass counts as an attacker win on every epoch.
  const auto vi = bgg::oracle_burst_probability(p, 0, OracleMethod::value_iteration);
  EXPECT_LT(vi.value, 1e-9);
  EXPECT_FALSE(vi.tail_warning());
  p = symmetric4();
  p.defender_rate = 0.0;
  EXPECT_NEAR(bgg::oracle_burst_probability(p, 0).value, 1.0, 1e-14);
  EXPECT_NEAR(bgg::oracle_burst_probability(p, 2, OracleMethod::value_iteration).value, 1.0, 1e-10);
  p = symmetric4();
  p.attacker_rate = p.defender_rate = 0.0;
  EXPECT_EQ(bgg::oracle_burst_probability(p, 0).value, 0.0);
}

TEST(BurstOracle, InitialStates) {
  auto p = symmetric4();
  p.initial_attacker = 3;
  EXPECT_EQ(bgg::oracle_burst_probability(p, 0).value, 1.0);
  p.initial_defender = 3;  // simultaneous exit goes to the defender
  EXPECT_EQ(bgg::oracle_burst_probability(p, 0).value, 0.0);
}

TEST(BurstOracle, SweepAgreesWithValueIteration) {
  for (int m : {2, 3, 4, 6, 9})
    for (double la : {0.5, 1.0, 2.0})
      for (double lh : {0.5, 1.0, 2.0})
        for (int b : {0, 2}) {
          GameParams p;
          p.total_nodes = m;
          p.attacker_rate = la;
          p.defender_rate = lh;
          const auto sweep = bgg::oracle_burst_probability(p, b);
          const auto vi = bgg::oracle_burst_probability(p, b, OracleMethod::value_iteration);
          EXPECT_NEAR(sweep.value, vi.value, 1e-10) << m << " " << la << " " << lh << " " << b;
          EXPECT_FALSE(vi.tail_warning());
        }
}

TEST(BurstOracle, SafetyAveragesOverBinomialReserve) {
  GameParams p;
  p.total_nodes = 6;
  p.attacker_rate = 1.5;
  const ReservePolicy pol{3, 0.4};
  const double w[4] = {0.216, 0.432, 0.288, 0.064};
  double expect = 0.0;
  for (int b = 0; b <= 3; ++b) expect += w[b] * bgg::oracle_burst_probability(p, b).value;
  EXPECT_NEAR(bgg::oracle_burst_probability(p, Mode::safety, pol).value, expect, 1e-14);
  EXPECT_NEAR(bgg::oracle_burst_probability(p, Mode::regular, std::nullopt).value,
              bgg::oracle_burst_probability(p, 0).value, 0.0);
  EXPECT_THROW(bgg::oracle_burst_probability(p, Mode::safety, std::nullopt), std::invalid_argument);
}

TEST(BurstOracle, DecreasesWithReserve) {
  GameParams p;
  p.total_nodes = 10;
  p.defender_rate = 1.2;
  double prev = 1.0;
  for (int b = 0; b <= 6; ++b) {
    const double q = bgg::oracle_burst_probability(p, b).value;
    EXPECT_LT(q, prev);
    prev = q;
  }
}

TEST(BurstOracle, RejectsLargeStateSpaces) {
  GameParams p;
  p.total_nodes = 300;
  EXPECT_THROW(bgg::oracle_burst_probability(p, 0), std::length_error);
  EXPECT_THROW(bgg::oracle_burst_probability(p, 0, OracleMethod::value_iteration), std::length_error);
}

TEST(BurstOracle, ExplicitTruncationReportsTail) {
  const auto p = symmetric4();
  const auto v = bgg::oracle_burst_probability(p, 0, OracleMethod::value_iteration, 6);
  // P{x + y > 6} = (2/3)^7, lumped into the attacker side.
  EXPECT_NEAR(v.tail_mass, std::pow(2.0 / 3.0, 7), 1e-12);
  EXPECT_TRUE(v.tail_warning());
  EXPECT_GT(v.value, kSymmetricBurst);
}

TEST(JointFunctional, UnitPointIsBurstProbability) {
  GameParams p;
  p.total_nodes = 7;
  p.attacker_rate = 1.3;
  p.defender_rate = 0.8;
  EXPECT_NEAR(bgg::oracle_joint_functional(p, {}), bgg::oracle_burst_probability(p, 0).value, 1e-14);
}

TEST(JointFunctional, ZetaGolden) {
  EXPECT_NEAR(bgg::oracle_joint_functional(symmetric4(), {0.9, 1, 1, 1, 1}), kSymmetricZeta09, 1e-14);
}

TEST(JointFunctional, RejectsOutOfRangeArguments) {
  EXPECT_THROW(bgg::oracle_joint_functional(symmetric4(), {0.0, 1, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(bgg::oracle_joint_functional(symmetric4(), {1, 1.2, 1, 1, 1}), std::invalid_argument);
}

TEST(PreExitOracle, SymmetricGolden) {
  const auto d = bgg::oracle_pre_exit_distribution(symmetric4());
  ASSERT_GE(d.pmf.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(d.pmf[k], kPreExit[k], 1e-14);
  double total = 0.0;
  for (double v : d.pmf) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(d.p_below, 1.0, 1e-14);  // strict majority: A_{nu-1} <= floor(M/2)
}

TEST(PreExitOracle, ReserveMovesMassAboveMajority) {
  GameParams p;
  p.total_nodes = 10;
  p.defender_rate = 1.2;
  const auto d = bgg::oracle_pre_exit_distribution(p, ReservePolicy{3, 1.0});
  EXPECT_LT(d.p_below, 1.0);
  EXPECT_GT(d.p_below, 0.0);
  EXPECT_EQ(d.pmf.size(), 11u);
  EXPECT_GT(d.pmf[8], 0.0);
}

TEST(PreExitOracle, NoExitIsAnError) {
  auto p = symmetric4();
  p.initial_attacker = 3;
  EXPECT_THROW(bgg::oracle_pre_exit_distribution(p), std::domain_error);
  p = symmetric4();
  p.attacker_rate = 0.0;
  EXPECT_THROW(bgg::oracle_pre_exit_distribution(p), std::domain_error);
}

}  // namespace
