#include "cagerl/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include "cagerl/errors.hpp"

namespace cagerl::env {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid env config: " + field + " " + why);
}

void require_ordered(const Range& r, const std::string& field) {
  require(std::isfinite(r.lo) && std::isfinite(r.hi), field, "must be finite");
  require(r.lo <= r.hi, field, "must satisfy lo <= hi");
}

}  // namespace

void EnvConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "dt", "must be > 0");
  require(episode_max_steps > 0, "episode_max_steps", "must be > 0");
  require_ordered(lead_vel_range, "lead_vel_range");
  require(lead_vel_range.lo >= 0.0, "lead_vel_range", "must be non-negative");
  require_ordered(lead_acc_range, "lead_acc_range");
  require_ordered(emergency_acc_range, "emergency_acc_range");
  require(emergency_acc_range.lo >= -6.0 && emergency_acc_range.hi <= -3.0,
          "emergency_acc_range", "must lie within [-6, -3]");
  require(emergency_rate_per_hour >= 0.0, "emergency_rate_per_hour", "must be >= 0");
  require(emergency_floor_vel >= 0.0, "emergency_floor_vel", "must be >= 0");
  require_ordered(segment_duration_range, "segment_duration_range");
  require(segment_duration_range.lo > 0.0, "segment_duration_range", "must be positive");
  require_ordered(mu_range, "mu_range");
  require(mu_range.lo >= 0.4 && mu_range.hi <= 1.0, "mu_range", "must lie within [0.4, 1.0]");
  require(target_th > 0.0, "target_th", "must be > 0");
  require_ordered(init_th_range, "init_th_range");
  require(init_th_range.lo > 0.0, "init_th_range", "must be positive");
  require(host_vel_jitter >= 0.0, "host_vel_jitter", "must be >= 0");
}

Features Observation::normalized() const {
  return {v / 40.0, v_dot / 6.0, v_rel / 20.0,
          std::min(th, cage::kHeadwaySentinel) - kHeadwayFeatureCentre};
}

std::pair<SimState, Observation> reset(const EnvConfig& config, std::uint64_t seed,
                                       LeadMode mode) {
  config.validate();
  SimState s;
  s.rng = Rng(seed);
  s.lead_vel = s.rng.uniform(config.lead_vel_range.lo, config.lead_vel_range.hi);
  s.mu = s.rng.uniform(config.mu_range.lo, config.mu_range.hi);
  const double th0 = s.rng.uniform(config.init_th_range.lo, config.init_th_range.hi);
  const double jitter = s.rng.uniform(-config.host_vel_jitter, config.host_vel_jitter);
  s.host_vel = std::max(0.0, s.lead_vel + jitter);
  s.host_pos = 0.0;
  s.lead_pos = th0 * std::max(s.host_vel, 1.0);
  s.lead_mode = mode == LeadMode::kAdversarialExternal ? mode : LeadMode::kNaturalistic;
  return {s, compute_observation(s)};
}

SimState host_dynamics(const SimState& state, double pedal, double dt) {
  SimState s = state;
  const double brake_cap = s.mu * kGravity;
  const double a_cmd = pedal >= 0.0 ? pedal * kEngineAccel : pedal * brake_cap;
  const double blend = std::min(1.0, dt / kActuatorLag);
  double a = s.host_acc + blend * (a_cmd - s.host_acc);
  a = std::clamp(a, -brake_cap, std::min(kEngineAccel, brake_cap));
  double v = s.host_vel + a * dt;
  if (v <= 0.0) {
    v = 0.0;
    a = std::max(a, 0.0);
  }
  s.host_acc = a;
  s.host_vel = v;
  // Semi-implicit Euler: position advances with the updated velocity.
  s.host_pos += v * dt;
  return s;
}

double lead_policy_naturalistic(SimState& s, const EnvConfig& config, bool* emergency_started) {
  if (emergency_started) *emergency_started = false;
  LeadScript& lead = s.lead;

  if (s.lead_mode == LeadMode::kEmergencyBraking) {
    if (s.lead_vel > lead.emergency_target) return lead.emergency_acc;
    s.lead_mode = LeadMode::kNaturalistic;
    lead.segment_remaining = 0.0;
  }

  const double hazard = config.dt / 3600.0 * config.emergency_rate_per_hour;
  if (s.rng.uniform01() < hazard && s.lead_vel > config.emergency_floor_vel) {
    s.lead_mode = LeadMode::kEmergencyBraking;
    lead.emergency_acc =
        s.rng.uniform(config.emergency_acc_range.lo, config.emergency_acc_range.hi);
    lead.emergency_target = s.rng.uniform(config.emergency_floor_vel, s.lead_vel);
    if (emergency_started) *emergency_started = true;
    return lead.emergency_acc;
  }

  const Range& vel = config.lead_vel_range;
  if (lead.segment_remaining <= 0.0) {
    lead.segment_remaining =
        s.rng.uniform(config.segment_duration_range.lo, config.segment_duration_range.hi);
    lead.segment_acc = s.rng.uniform(config.lead_acc_range.lo, config.lead_acc_range.hi);
    if (s.lead_vel < vel.lo) {
      // Recovering from an emergency stop below the normal speed band.
      lead.segment_acc = std::abs(lead.segment_acc);
    }
  }
  lead.segment_remaining -= config.dt;

  double acc = lead.segment_acc;
  if (s.lead_vel >= vel.hi && acc > 0.0) acc = 0.0;
  if (s.lead_vel <= vel.lo && acc < 0.0) acc = 0.0;
  return acc;
}

Observation compute_observation(const SimState& s) {
  Observation o;
  o.v = s.host_vel;
  o.v_dot = s.host_acc;
  o.v_rel = s.v_rel();
  o.th = cage::time_headway(std::max(s.x_rel(), 0.0), s.host_vel);
  return o;
}

double reward_headway(double th, double th_prev, double target_th) {
  const double err = std::abs(th - target_th);
  if (err <= 0.25) return 1.0;
  auto sign = [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); };
  const bool toward = sign(th - th_prev) * sign(target_th - th_prev) > 0.0;
  if (err <= 1.0) return toward ? 0.1 : -0.1;
  return toward ? -0.05 : -0.5;
}

double reward_total(double r_th, bool breached) { return r_th + (breached ? kSafetyPenalty : 0.0); }

std::pair<SimState, StepResult> step(const SimState& state, const EnvConfig& config,
                                     double pedal, bool cage_enabled,
                                     std::optional<double> lead_command) {
  if (state.done) throw UsageError("env step: episode already finished");
  if (!(std::abs(pedal) <= 1.0)) {
    throw DomainError("env step: pedal outside [-1, 1]: " + std::to_string(pedal));
  }

  StepResult result;
  result.agent_pedal = pedal;
  result.verdict =
      cage::arbitrate(std::max(state.x_rel(), 0.0), state.host_vel, state.v_rel(), pedal);
  if (!cage_enabled) {
    result.verdict.breached = false;
    result.verdict.executed_pedal = pedal;
    result.verdict.b_final = result.verdict.b_agent;
  }
  if (result.verdict.breached) result.events.push_back(Event::kCageBreach);
  const double th_prev = result.verdict.th;

  SimState next = state;
  const Range& vel = config.lead_vel_range;
  if (next.lead_mode == LeadMode::kAdversarialExternal) {
    if (!lead_command) throw UsageError("env step: adversarial lead needs a command");
    double acc = *lead_command;
    double v = next.lead_vel + acc * config.dt;
    if (v > vel.hi || v < vel.lo) {
      v = std::clamp(v, vel.lo, vel.hi);
      acc = (v - next.lead_vel) / config.dt;
    }
    next.lead_acc = acc;
    next.lead_vel = v;
  } else {
    const bool was_below = next.lead_vel < vel.lo;
    bool started = false;
    const double acc = lead_policy_naturalistic(next, config, &started);
    if (started) result.events.push_back(Event::kEmergencyBrakeStart);
    double v = next.lead_vel + acc * config.dt;
    if (next.lead_mode == LeadMode::kEmergencyBraking) {
      v = std::max(v, 0.0);
    } else if (was_below) {
      v = std::min(v, vel.hi);
    } else {
      v = std::clamp(v, vel.lo, vel.hi);
    }
    next.lead_acc = acc;
    next.lead_vel = v;
  }
  next.lead_pos += next.lead_vel * config.dt;

  next = host_dynamics(next, result.verdict.executed_pedal, config.dt);
  next.t += config.dt;
  next.episode_step += 1;

  if (next.x_rel() <= 0.0) {
    next.collided = true;
    result.collision = true;
  }
  next.done = next.collided || next.episode_step >= config.episode_max_steps;
  result.done = next.done;

  result.observation = compute_observation(next);
  result.reward_th = reward_headway(result.observation.th, th_prev, config.target_th);
  result.reward_total = reward_total(result.reward_th, result.verdict.breached);
  return {std::move(next), std::move(result)};
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

const Observation& Environment::reset(std::uint64_t seed, LeadMode mode) {
  std::tie(state_, observation_) = env::reset(config_, seed, mode);
  return observation_;
}

const StepResult& Environment::step(double pedal, bool cage_enabled,
                                    std::optional<double> lead_command) {
  auto [next, result] = env::step(state_, config_, pedal, cage_enabled, lead_command);
  state_ = std::move(next);
  last_ = std::move(result);
  observation_ = last_.observation;
  return last_;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open trace file " + path.string());
  out_ << "t,host_vel,lead_vel,x_rel,th,ttc,pedal_agent,pedal_executed,b_th,b_ttc,"
          "r_th,r_total,breach,collision\n";
  out_ << std::setprecision(10);
}

void TraceWriter::write(const SimState& s, const StepResult& r) {
  const double ttc = cage::time_to_collision(std::max(s.x_rel(), 0.0), s.v_rel());
  out_ << s.t << ',' << s.host_vel << ',' << s.lead_vel << ',' << std::max(s.x_rel(), 0.0)
       << ',' << r.observation.th << ',' << ttc << ',' << r.agent_pedal << ','
       << r.verdict.executed_pedal << ',' << r.verdict.b_th << ',' << r.verdict.b_ttc << ','
       << r.reward_th << ',' << r.reward_total << ',' << int(r.verdict.breached) << ','
       << int(r.collision) << '\n';
}

}  // namespace cagerl::env
