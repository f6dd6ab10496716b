#include "cagerl/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cagerl/errors.hpp"

namespace cagerl::env {
namespace {

SimState cruising(double v, double mu = 1.0) {
  SimState s;
  s.host_vel = v;
  s.lead_vel = v;
  s.lead_pos = 2.0 * v;
  s.mu = mu;
  return s;
}

TEST(EnvResetTest, SameSeedSameState) {
  EnvConfig cfg;
  const auto [a, oa] = reset(cfg, 42);
  const auto [b, ob] = reset(cfg, 42);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(oa.th, ob.th);
  const auto [c, oc] = reset(cfg, 43);
  EXPECT_FALSE(a == c);
}

TEST(EnvResetTest, ZeroJitterPlacesLeadAtHeadway) {
  EnvConfig cfg;
  cfg.init_th_range = {2.0, 2.0};
  cfg.lead_vel_range = {30.0, 30.0};
  cfg.host_vel_jitter = 0.0;
  const auto [s, obs] = reset(cfg, 1);
  EXPECT_DOUBLE_EQ(s.x_rel(), 60.0);
  EXPECT_DOUBLE_EQ(obs.th, 2.0);
  EXPECT_EQ(obs.v_rel, 0.0);
}

TEST(EnvResetTest, DrawsStayInConfiguredRanges) {
  EnvConfig cfg;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto [s, obs] = reset(cfg, seed);
    ASSERT_TRUE(cfg.mu_range.contains(s.mu));
    ASSERT_TRUE(cfg.lead_vel_range.contains(s.lead_vel));
    ASSERT_LE(std::abs(s.host_vel - s.lead_vel), cfg.host_vel_jitter);
    ASSERT_GE(obs.th, cfg.init_th_range.lo - 1e-12);
    ASSERT_LE(obs.th, cfg.init_th_range.hi + 1e-12);
  }
}

TEST(EnvResetTest, InvalidConfigRejected) {
  EnvConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(reset(cfg, 0), ConfigError);
  cfg = EnvConfig{};
  cfg.mu_range = {0.2, 1.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.emergency_acc_range = {-8.0, -3.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.lead_vel_range = {40.0, 17.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(HostDynamicsTest, ZeroPedalIsFixedPoint) {
  const SimState s = host_dynamics(cruising(20.0), 0.0, 0.04);
  EXPECT_EQ(s.host_vel, 20.0);
  EXPECT_EQ(s.host_acc, 0.0);
}

TEST(HostDynamicsTest, FullBrakeConvergesToFrictionLimit) {
  SimState s = cruising(40.0, 1.0);
  for (int i = 0; i < 25; ++i) s = host_dynamics(s, -1.0, 0.04);  // 5 lag constants
  // Lag error after k steps is 0.8^k of the command.
  EXPECT_NEAR(s.host_acc, -9.81 * (1.0 - std::pow(0.8, 25)), 1e-9);
  EXPECT_NEAR(s.host_acc, -9.81, 0.05);
}

TEST(HostDynamicsTest, EngineLimitedByFriction) {
  SimState s = cruising(20.0, 0.4);
  for (int i = 0; i < 200; ++i) s = host_dynamics(s, 1.0, 0.04);
  EXPECT_NEAR(s.host_acc, 0.4 * 9.81, 1e-12);
  SimState t = cruising(20.0, 1.0);
  for (int i = 0; i < 200; ++i) t = host_dynamics(t, 1.0, 0.04);
  EXPECT_NEAR(t.host_acc, 4.0, 1e-9);
}

TEST(HostDynamicsTest, PositionAdvancesWithUpdatedVelocity) {
  SimState s = cruising(20.0);
  for (int i = 0; i < 50; ++i) {
    const SimState next = host_dynamics(s, i % 2 ? 0.7 : -0.4, 0.04);
    EXPECT_NEAR(next.host_pos - s.host_pos, next.host_vel * 0.04, 1e-12);
    EXPECT_EQ(next.host_vel, s.host_vel + next.host_acc * 0.04);
    s = next;
  }
}

TEST(HostDynamicsTest, NeverReverses) {
  SimState s = cruising(0.5, 1.0);
  for (int i = 0; i < 100; ++i) {
    s = host_dynamics(s, -1.0, 0.04);
    ASSERT_GE(s.host_vel, 0.0);
  }
  EXPECT_EQ(s.host_vel, 0.0);
}

TEST(HostDynamicsTest, FullBrakeStopsWithinBound) {
  for (double v0 : {5.0, 20.0, 40.0}) {
    SimState s = cruising(v0, 1.0);
    double t = 0.0;
    while (s.host_vel > 0.0) {
      s = host_dynamics(s, -1.0, 0.04);
      t += 0.04;
    }
    EXPECT_LE(t, v0 / 9.81 + 5 * kActuatorLag) << v0;
  }
}

TEST(LeadPolicyTest, SegmentAccelerationsWithinBounds) {
  EnvConfig cfg;
  cfg.emergency_rate_per_hour = 0.0;
  SimState s = cruising(30.0);
  s.rng = Rng(3);
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    s.lead.segment_remaining = 0.0;
    lead_policy_naturalistic(s, cfg);
    ASSERT_GE(s.lead.segment_acc, -2.0);
    ASSERT_LE(s.lead.segment_acc, 2.0);
    lo = std::min(lo, s.lead.segment_acc);
    hi = std::max(hi, s.lead.segment_acc);
  }
  EXPECT_LT(lo, -1.99);
  EXPECT_GT(hi, 1.99);
}

TEST(LeadPolicyTest, EmergencyRateMatchesConfiguration) {
  EnvConfig cfg;
  const double per_step = cfg.dt / 3600.0 * cfg.emergency_rate_per_hour;
  EXPECT_NEAR(per_step, 1.111e-5, 1e-8);

  cfg.episode_max_steps = 9'000'000;  // 100 h
  Environment env(cfg);
  env.reset(17);
  int emergencies = 0;
  while (true) {
    const auto& r = env.step(-1.0, false);
    for (auto e : r.events) emergencies += e == Event::kEmergencyBrakeStart;
    if (r.done) break;
  }
  EXPECT_GE(emergencies, 70);
  EXPECT_LE(emergencies, 130);
}

TEST(LeadPolicyTest, VelocityStaysInRangeOutsideEmergencies) {
  EnvConfig cfg;
  cfg.emergency_rate_per_hour = 0.0;
  cfg.episode_max_steps = 200000;
  Environment env(cfg);
  env.reset(8);
  while (!env.step(-1.0, false).done) {
    ASSERT_TRUE(cfg.lead_vel_range.contains(env.state().lead_vel));
  }
}

TEST(LeadPolicyTest, EmergencyStopsAtTargetThenRecovers) {
  EnvConfig cfg;
  cfg.emergency_rate_per_hour = 3600.0 / cfg.dt;  // certain start
  SimState s = cruising(30.0);
  s.rng = Rng(5);
  bool started = false;
  const double acc = lead_policy_naturalistic(s, cfg, &started);
  ASSERT_TRUE(started);
  EXPECT_EQ(s.lead_mode, LeadMode::kEmergencyBraking);
  EXPECT_GE(acc, -6.0);
  EXPECT_LE(acc, -3.0);
  EXPECT_GE(s.lead.emergency_target, 12.0);
  EXPECT_LT(s.lead.emergency_target, 30.0);
}

TEST(LeadPolicyTest, LeadTraceIgnoresHostActions) {
  EnvConfig cfg;
  cfg.episode_max_steps = 3000;
  cfg.emergency_rate_per_hour = 200.0;
  Environment a(cfg), b(cfg);
  a.reset(99);
  b.reset(99);
  for (int i = 0; i < 3000; ++i) {
    const auto& ra = a.step(-1.0, false);
    const auto& rb = b.step(i % 3 == 0 ? 0.3 : -0.6, false);
    ASSERT_EQ(a.state().lead_vel, b.state().lead_vel);
    ASSERT_EQ(a.state().lead_pos, b.state().lead_pos);
    if (ra.done || rb.done) break;
  }
}

TEST(ObservationTest, Arithmetic) {
  SimState s;
  s.host_vel = 20.0;
  s.lead_vel = 20.0;
  s.lead_pos = 40.0;
  Observation o = compute_observation(s);
  EXPECT_EQ(o.v_rel, 0.0);
  EXPECT_DOUBLE_EQ(o.th, 2.0);

  s.host_vel = 25.0;
  EXPECT_EQ(compute_observation(s).v_rel, 5.0);

  s.host_vel = 0.0;
  EXPECT_EQ(compute_observation(s).th, cage::kHeadwaySentinel);
}

TEST(ObservationTest, FeaturesFiniteEverywhere) {
  Observation o{0.0, 0.0, 0.0, cage::kHeadwaySentinel};
  for (double f : o.normalized()) EXPECT_TRUE(std::isfinite(f));
  o = {40.0, -9.81, 40.0, 0.0};
  for (double f : o.normalized()) EXPECT_TRUE(std::isfinite(f));
}

TEST(RewardTest, HeadwayExamples) {
  EXPECT_EQ(reward_headway(2.0, 2.0), 1.0);
  EXPECT_EQ(reward_headway(2.25, 3.0), 1.0);
  EXPECT_EQ(reward_headway(1.5, 1.4), 0.1);
  EXPECT_EQ(reward_headway(1.5, 1.6), -0.1);
  EXPECT_EQ(reward_headway(2.5, 2.6), 0.1);
  EXPECT_EQ(reward_headway(4.0, 3.5), -0.5);
  EXPECT_EQ(reward_headway(3.5, 4.0), -0.05);
  EXPECT_EQ(reward_headway(0.5, 0.6), -0.5);
  EXPECT_EQ(reward_headway(0.6, 0.5), -0.05);
  // A stalled headway outside the band is not progress.
  EXPECT_EQ(reward_headway(1.5, 1.5), -0.1);
}

TEST(RewardTest, PenaltyIsAdditive) {
  EXPECT_EQ(reward_total(1.0, false), 1.0);
  EXPECT_DOUBLE_EQ(reward_total(1.0, true), 0.9);
  EXPECT_DOUBLE_EQ(reward_total(-0.5, true), -0.6);
}

TEST(EnvStepTest, DeterministicForSameActions) {
  EnvConfig cfg;
  cfg.episode_max_steps = 500;
  auto [a, _a] = reset(cfg, 3);
  auto [b, _b] = reset(cfg, 3);
  for (int i = 0; i < 500; ++i) {
    const double pedal = std::sin(0.05 * i);
    auto ra = step(a, cfg, pedal, true);
    auto rb = step(b, cfg, pedal, true);
    a = ra.first;
    b = rb.first;
    ASSERT_TRUE(a == b);
    if (a.done) break;
  }
}

TEST(EnvStepTest, CageDisabledPassesPedalThrough) {
  EnvConfig cfg;
  SimState s = cruising(30.0);
  s.lead_pos = 10.0;  // th = 0.33 s, cage would brake fully
  const auto [next, r] = step(s, cfg, 0.6, false);
  EXPECT_EQ(r.verdict.executed_pedal, 0.6);
  EXPECT_FALSE(r.verdict.breached);
  EXPECT_EQ(r.reward_total, r.reward_th);

  const auto [next2, r2] = step(s, cfg, 0.6, true);
  EXPECT_EQ(r2.verdict.executed_pedal, -1.0);
  EXPECT_TRUE(r2.verdict.breached);
  EXPECT_DOUBLE_EQ(r2.reward_total, r2.reward_th - 0.1);
  ASSERT_EQ(r2.events.size(), 1u);
  EXPECT_EQ(r2.events[0], Event::kCageBreach);
}

TEST(EnvStepTest, CollisionEndsEpisode) {
  EnvConfig cfg;
  SimState s = cruising(30.0);
  s.lead_pos = 0.2;
  s.host_vel = 40.0;
  const auto [next, r] = step(s, cfg, 1.0, false);
  EXPECT_TRUE(r.collision);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.observation.th, 0.0);
  EXPECT_THROW(step(next, cfg, 0.0, false), UsageError);
}

TEST(EnvStepTest, TimeoutEndsEpisodeWithoutCollision) {
  EnvConfig cfg;
  cfg.episode_max_steps = 7500;
  Environment env(cfg);
  env.reset(4);
  std::int64_t n = 0;
  StepResult last;
  do {
    last = env.step(-1.0, false);
    ++n;
  } while (!last.done);
  EXPECT_EQ(n, 7500);
  EXPECT_FALSE(last.collision);
}

TEST(EnvStepTest, RejectsOutOfRangePedal) {
  EnvConfig cfg;
  const SimState s = cruising(20.0);
  EXPECT_THROW(step(s, cfg, 1.5, false), DomainError);
  EXPECT_THROW(step(s, cfg, std::nan(""), false), DomainError);
}

TEST(EnvStepTest, AdversarialLeadClampedToRange) {
  EnvConfig cfg;
  cfg.lead_vel_range = {17.0, 40.0};
  auto [s, obs] = reset(cfg, 2, LeadMode::kAdversarialExternal);
  EXPECT_THROW(step(s, cfg, 0.0, false), UsageError);
  for (int i = 0; i < 2000 && !s.done; ++i) {
    auto [next, r] = step(s, cfg, -0.2, false, i < 1000 ? -6.0 : 2.0);
    ASSERT_GE(next.lead_vel, 17.0);
    ASSERT_LE(next.lead_vel, 40.0);
    ASSERT_GE(next.lead_acc, -6.0);
    ASSERT_LE(next.lead_acc, 2.0);
    s = next;
  }
}

TEST(TraceWriterTest, WritesHeaderAndRows) {
  const auto path = std::filesystem::temp_directory_path() / "cagerl_trace_test.csv";
  {
    EnvConfig cfg;
    Environment env(cfg);
    env.reset(1);
    TraceWriter trace(path);
    for (int i = 0; i < 3; ++i) trace.write(env.state(), env.step(0.1, true));
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "t,host_vel,lead_vel,x_rel,th,ttc,pedal_agent,pedal_executed,b_th,b_ttc,r_th,"
            "r_total,breach,collision");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace cagerl::env
