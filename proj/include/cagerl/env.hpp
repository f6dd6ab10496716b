#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <vector>

#include "cagerl/rng.hpp"
#include "cagerl/safety_cage.hpp"

namespace cagerl::env {

inline constexpr double kGravity = 9.81;      // m/s^2
inline constexpr double kEngineAccel = 4.0;   // m/s^2, full-throttle cap
inline constexpr double kActuatorLag = 0.2;   // s, first-order lag constant
inline constexpr double kSafetyPenalty = -0.1;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Range&) const = default;
};

struct EnvConfig {
  double dt = 0.04;
  std::int64_t episode_max_steps = 7500;
  Range lead_vel_range{17.0, 40.0};
  Range lead_acc_range{-2.0, 2.0};
  Range emergency_acc_range{-6.0, -3.0};
  double emergency_rate_per_hour = 1.0;
  // Lowest speed an emergency stop may target.
  double emergency_floor_vel = 12.0;
  Range segment_duration_range{2.0, 10.0};
  Range mu_range{0.4, 1.0};
  double target_th = 2.0;
  Range init_th_range{1.5, 3.0};
  double host_vel_jitter = 2.0;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

enum class LeadMode { kNaturalistic, kEmergencyBraking, kAdversarialExternal };

// Scripted lead-vehicle bookkeeping for the naturalistic behaviour.
struct LeadScript {
  double segment_remaining = 0.0;
  double segment_acc = 0.0;
  double emergency_acc = 0.0;
  double emergency_target = 0.0;
  bool operator==(const LeadScript&) const = default;
};

struct SimState {
  double t = 0.0;
  double host_pos = 0.0;
  double host_vel = 0.0;
  double host_acc = 0.0;
  double lead_pos = 0.0;
  double lead_vel = 0.0;
  double lead_acc = 0.0;
  double mu = 1.0;
  Rng rng;  // drives the lead script only, so lead traces ignore the host
  std::int64_t episode_step = 0;
  LeadMode lead_mode = LeadMode::kNaturalistic;
  LeadScript lead;
  bool collided = false;
  bool done = false;

  double x_rel() const { return lead_pos - host_pos; }
  double v_rel() const { return host_vel - lead_vel; }
  bool operator==(const SimState&) const = default;
};

inline constexpr std::size_t kObservationSize = 4;
using Features = std::array<double, kObservationSize>;

// Headway feature is centred on the middle of the reward band.
inline constexpr double kHeadwayFeatureCentre = 2.0;

// Raw agent observation [v, v_dot, v_rel, th]; v_rel > 0 means closing.
struct Observation {
  double v = 0.0;
  double v_dot = 0.0;
  double v_rel = 0.0;
  double th = 0.0;

  // Network input scaling: v/40, v_dot/6, v_rel/20, min(th, 10) - 2.
  Features normalized() const;
};

enum class Event { kEmergencyBrakeStart, kCageBreach };

struct StepResult {
  Observation observation;
  cage::CageVerdict verdict;
  double agent_pedal = 0.0;
  double reward_th = 0.0;
  double reward_total = 0.0;
  bool collision = false;
  bool done = false;
  std::vector<Event> events;
};

// Draws a fresh episode. Identical (config, seed) give identical states.
std::pair<SimState, Observation> reset(const EnvConfig& config, std::uint64_t seed,
                                       LeadMode mode = LeadMode::kNaturalistic);

// Point-mass host with first-order actuator lag and friction-limited braking.
SimState host_dynamics(const SimState& state, double pedal, double dt);

// Advances the lead script by one step and returns the lead acceleration.
// Emergency starts are reported through `emergency_started`.
double lead_policy_naturalistic(SimState& state, const EnvConfig& config,
                                bool* emergency_started = nullptr);

Observation compute_observation(const SimState& state);

double reward_headway(double th, double th_prev, double target_th = 2.0);
double reward_total(double r_th, bool breached);

// One control step. `lead_command` is required in adversarial mode and
// ignored otherwise. Throws UsageError once the episode is done.
std::pair<SimState, StepResult> step(const SimState& state, const EnvConfig& config,
                                     double pedal, bool cage_enabled,
                                     std::optional<double> lead_command = std::nullopt);

// Stateful convenience wrapper over reset/step.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  const Observation& reset(std::uint64_t seed, LeadMode mode = LeadMode::kNaturalistic);
  const StepResult& step(double pedal, bool cage_enabled,
                         std::optional<double> lead_command = std::nullopt);

  const SimState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  const Observation& observation() const { return observation_; }

 private:
  EnvConfig config_;
  SimState state_;
  Observation observation_;
  StepResult last_;
};

// Optional per-step CSV trace.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write(const SimState& state, const StepResult& result);

 private:
  std::ofstream out_;
};

}  // namespace cagerl::env
