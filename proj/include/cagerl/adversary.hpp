#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cagerl/env.hpp"
#include "cagerl/nn.hpp"
#include "cagerl/rng.hpp"

// Learned antagonist: an advantage actor-critic agent that drives the lead
// vehicle to shrink the headway kept by a frozen host policy.
namespace cagerl::adversary {

inline constexpr double kRewardCap = 100.0;

struct AdversaryConfig {
  env::Range vel_range{17.0, 40.0};
  env::Range acc_bounds{-6.0, 2.0};
  int episodes = 2500;
  std::int64_t episode_steps = 1500;
  int n_step = 16;
  int hidden_width = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double lr = 3e-4;
  double gamma = 0.99;
  double grad_clip = 0.5;
  double log_std_min = -5.0;
  double log_std_max = 1.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  bool operator==(const AdversaryConfig&) const = default;
};

// Velocity ranges used for adversarial testing.
inline constexpr env::Range kHighVelRange{17.0, 40.0};
inline constexpr env::Range kLowVelRange{12.0, 30.0};

// Inverse-headway reward min(1/th, 100); th = 0 gives the cap.
double adversary_reward(double th);

// [lead_vel/40, host_vel/40, x_rel/100, v_rel/20].
env::Features adversary_observation(const env::SimState& state);

// Policy/value network: shared dense trunk, linear head [mean, log_std, value].
// Actions are a Gaussian sample squashed by tanh onto acc_bounds.
class AdversaryPolicy {
 public:
  AdversaryPolicy(const AdversaryConfig& config, std::uint64_t init_seed);
  AdversaryPolicy(const AdversaryConfig& config, nn::Network net);

  struct Head {
    double mean = 0.0;
    double log_std = 0.0;  // clamped to [log_std_min, log_std_max]
    double value = 0.0;
  };
  struct Sample {
    double action = 0.0;  // lead acceleration, within acc_bounds
    double raw = 0.0;     // pre-squash Gaussian sample
    Head head;
  };

  Head evaluate(const env::Features& obs) const;
  Sample sample(const env::Features& obs, Rng& rng) const;
  // Squashed mean action.
  double mean_action(const env::Features& obs) const;
  double squash(double raw) const;

  nn::Network& network() { return net_; }
  const nn::Network& network() const { return net_; }
  const AdversaryConfig& config() const { return config_; }

  static nn::NetworkSpec default_spec(const AdversaryConfig& config);

 private:
  AdversaryConfig config_;
  nn::Network net_;
};

struct AdversaryStep {
  env::Features obs{};
  double raw = 0.0;  // pre-squash sample that produced the action
  double action = 0.0;
  double reward = 0.0;
  double value = 0.0;  // value estimate at obs when acting
};

struct A2cLosses {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

// n-step returns per position R_k = sum_i gamma^(i-k) r_i + gamma^(n-k) V_boot
// (bootstrap dropped when `terminal`).
std::vector<double> nstep_returns(std::span<const AdversaryStep> segment, double bootstrap_value,
                                  bool terminal, double gamma);

// One clipped optimizer step on the shared network from a complete segment.
A2cLosses a2c_update(AdversaryPolicy& policy, std::span<const AdversaryStep> segment,
                     double bootstrap_value, bool terminal);

struct AdversaryEpisode {
  int episode = 0;
  double min_th = 0.0;
  int collisions = 0;
  double ret = 0.0;
};

struct AdversaryRun {
  std::vector<AdversaryEpisode> log;
  AdversaryPolicy policy;
};

// Seed of run `run_id`; distinct run ids give independent adversaries.
std::uint64_t run_seed(std::uint64_t seed, int run_id);

// Trains one adversary against a frozen host actor (no safety cage). The
// host network is only read.
AdversaryRun adversary_train(const nn::Network& host, const env::EnvConfig& base_env,
                             const AdversaryConfig& config, int run_id,
                             const std::function<void(const AdversaryEpisode&)>& on_episode = {});

inline constexpr const char* kAdversaryLogHeader = "episode,min_th,collisions,return";
void write_adversary_log(const std::vector<AdversaryEpisode>& log,
                         const std::filesystem::path& path);
std::vector<AdversaryEpisode> read_adversary_log(const std::filesystem::path& path);

}  // namespace cagerl::adversary
