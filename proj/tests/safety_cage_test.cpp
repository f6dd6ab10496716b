#include "cagerl/safety_cage.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cagerl/errors.hpp"

namespace cagerl::cage {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent transcription of the headway rule as a sum of indicator terms.
double th_oracle(double th) {
  const double r1 = (th > 1.0 && th <= 1.6) ? 1.0 - th / 2.0 : 0.0;
  const double r2 = (th > 0.5 && th <= 1.0) ? 1.5 - th : 0.0;
  const double r3 = th <= 0.5 ? 1.0 : 0.0;
  return r1 + r2 + r3;
}

double ttc_oracle(double ttc) {
  const double r1 = (ttc > 1.5 && ttc <= 2.5) ? 1.25 - ttc / 2.0 : 0.0;
  const double r2 = (ttc > 1.0 && ttc <= 1.5) ? 2.0 - ttc : 0.0;
  const double r3 = ttc <= 1.0 ? 1.0 : 0.0;
  return r1 + r2 + r3;
}

TEST(SafetyCageTest, HeadwaySpotValues) {
  EXPECT_DOUBLE_EQ(th_braking(1.2), 0.4);
  EXPECT_DOUBLE_EQ(th_braking(0.75), 0.75);
  EXPECT_EQ(th_braking(3.0), 0.0);
  EXPECT_EQ(th_braking(0.2), 1.0);
  EXPECT_EQ(th_braking(0.0), 1.0);
}

TEST(SafetyCageTest, TimeToCollisionSpotValues) {
  EXPECT_DOUBLE_EQ(ttc_braking(2.0), 0.25);
  EXPECT_DOUBLE_EQ(ttc_braking(1.2), 0.8);
  EXPECT_EQ(ttc_braking(kInf), 0.0);
  EXPECT_EQ(ttc_braking(0.5), 1.0);
}

TEST(SafetyCageTest, MatchesIndicatorOracleOnRandomDraws) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> th(0.0, 4.0), ttc(0.0, 5.0);
  for (int i = 0; i < 100000; ++i) {
    const double a = th(gen), b = ttc(gen);
    ASSERT_NEAR(th_braking(a), th_oracle(a), 1e-12) << "th=" << a;
    ASSERT_NEAR(ttc_braking(b), ttc_oracle(b), 1e-12) << "ttc=" << b;
  }
}

TEST(SafetyCageTest, BoundariesBelongToTheRiskierBranch) {
  EXPECT_EQ(th_risk(1.6), RiskLevel::kR1);
  EXPECT_EQ(th_risk(std::nextafter(1.6, 2.0)), RiskLevel::kLow);
  EXPECT_EQ(th_risk(1.0), RiskLevel::kR2);
  EXPECT_EQ(th_risk(0.5), RiskLevel::kR3);
  EXPECT_EQ(ttc_risk(2.5), RiskLevel::kR1);
  EXPECT_EQ(ttc_risk(1.5), RiskLevel::kR2);
  EXPECT_EQ(ttc_risk(1.0), RiskLevel::kR3);
  EXPECT_EQ(ttc_risk(kInf), RiskLevel::kLow);
}

TEST(SafetyCageTest, HeadwayCageJumpsByTwoTenthsAtEntry) {
  EXPECT_NEAR(th_braking(1.6) - th_braking(std::nextafter(1.6, 2.0)), 0.2, 1e-12);
  // Continuous at the inner knots.
  EXPECT_NEAR(th_braking(1.0), th_braking(std::nextafter(1.0, 2.0)), 1e-9);
  EXPECT_NEAR(th_braking(0.5), th_braking(std::nextafter(0.5, 1.0)), 1e-9);
}

TEST(SafetyCageTest, TtcCageContinuousAtKnots) {
  for (double knot : {2.5, 1.5, 1.0}) {
    EXPECT_NEAR(ttc_braking(knot), ttc_braking(std::nextafter(knot, 3.0)), 1e-9) << knot;
  }
}

TEST(SafetyCageTest, DemandsAreMonotoneNonIncreasing) {
  double prev_th = 2.0, prev_ttc = 2.0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = 4.0 * i / 20000.0;
    EXPECT_LE(th_braking(x), prev_th + 1e-15);
    EXPECT_LE(ttc_braking(x), prev_ttc + 1e-15);
    prev_th = th_braking(x);
    prev_ttc = ttc_braking(x);
  }
}

TEST(SafetyCageTest, HeadwayGuards) {
  EXPECT_DOUBLE_EQ(time_headway(40.0, 20.0), 2.0);
  EXPECT_EQ(time_headway(40.0, 0.1), kHeadwaySentinel);
  EXPECT_EQ(time_headway(40.0, 0.0), kHeadwaySentinel);
  EXPECT_THROW(time_headway(-1.0, 20.0), DomainError);
}

TEST(SafetyCageTest, TtcInfiniteWhenOpening) {
  EXPECT_EQ(time_to_collision(30.0, 0.0), kInf);
  EXPECT_EQ(time_to_collision(30.0, -3.0), kInf);
  EXPECT_DOUBLE_EQ(time_to_collision(30.0, 15.0), 2.0);
}

TEST(SafetyCageTest, LowRiskPassesAgentThrough) {
  // th = 3 s, opening gap.
  const auto v = arbitrate(60.0, 20.0, -1.0, 0.5);
  EXPECT_EQ(v.b_final, 0.0);
  EXPECT_EQ(v.executed_pedal, 0.5);
  EXPECT_FALSE(v.breached);
}

TEST(SafetyCageTest, CageOverridesWeakBraking) {
  // th = 0.75 s, same speed.
  const auto v = arbitrate(15.0, 20.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(v.b_final, 0.75);
  EXPECT_DOUBLE_EQ(v.executed_pedal, -0.75);
  EXPECT_TRUE(v.breached);
  EXPECT_EQ(v.risk_th, RiskLevel::kR2);
}

TEST(SafetyCageTest, AgentBrakingHarderWins) {
  const auto v = arbitrate(15.0, 20.0, 0.0, -0.9);
  EXPECT_DOUBLE_EQ(v.b_final, 0.9);
  EXPECT_DOUBLE_EQ(v.executed_pedal, -0.9);
  EXPECT_FALSE(v.breached);
}

TEST(SafetyCageTest, FinalBrakingIsMaxOfThree) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> gap(0.0, 80.0), speed(0.0, 40.0), rel(-10.0, 10.0),
      pedal(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const auto v = arbitrate(gap(gen), speed(gen), rel(gen), pedal(gen));
    EXPECT_EQ(v.b_final, std::max({v.b_th, v.b_ttc, v.b_agent}));
    EXPECT_GE(v.b_final, 0.0);
    EXPECT_LE(v.b_final, 1.0);
    EXPECT_EQ(v.breached, std::max(v.b_th, v.b_ttc) > v.b_agent);
  }
}

TEST(SafetyCageTest, ArbitrationIsIdempotent) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> gap(0.0, 80.0), speed(0.0, 40.0), rel(-10.0, 10.0),
      pedal(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = gap(gen), v = speed(gen), vr = rel(gen);
    const auto first = arbitrate(x, v, vr, pedal(gen));
    const auto second = arbitrate(x, v, vr, first.executed_pedal);
    EXPECT_EQ(second.executed_pedal, first.executed_pedal);
    EXPECT_FALSE(second.breached);
  }
}

}  // namespace
}  // namespace cagerl::cage
