#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cagerl/env.hpp"
#include "cagerl/nn.hpp"
#include "cagerl/rng.hpp"

namespace cagerl::ddpg {

enum class Variant { kDeep, kShallow };
std::string_view to_string(Variant v);
Variant parse_variant(const std::string& s);  // throws ConfigError

// How the critic's bootstrap target is formed.
enum class TargetMode {
  kTargetNetworks,  // Q'(s', pi'(s')), the usual slowly-tracking copies
  kOnlineCritic,    // Q(s', pi(s')) with the live networks
};

struct Hyperparams {
  int batch_size = 64;
  int hidden_width = 50;
  int lstm_units = 16;
  double gamma = 0.99;
  double lr_actor = 1e-4;
  double lr_critic = 1e-2;
  std::size_t replay_capacity = 1'000'000;
  double tau = 1e-3;
  double noise_scale_init = 1.0;
  double noise_decay = 0.997;
  double grad_clip = 0.5;
  double ou_mu = 0.0;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  int episodes = 5000;
  std::int64_t warmup_steps = 1000;
  int update_every = 1;
  int checkpoint_every = 500;  // episodes; 0 disables periodic checkpoints
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  TargetMode target_mode = TargetMode::kTargetNetworks;

  void validate() const;  // throws ConfigError naming the field
  bool operator==(const Hyperparams&) const = default;
};

struct Transition {
  env::Features s{};
  double a = 0.0;
  double r = 0.0;
  env::Features s_next{};
  bool done = false;  // true terminal (collision); timeouts stay false
  std::int64_t episode_id = 0;
  std::int64_t step_index = 0;
};

// Oldest-first ring buffer with an index of contiguous per-episode segments,
// used to draw sequences of consecutive steps from a single episode.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  // Transitions of one episode must arrive with step_index increasing by 1.
  void push(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // True when some episode segment holds at least `length` transitions.
  bool ready(std::size_t length) const;
  // Uniformly random valid start; nullopt when not ready.
  std::optional<std::vector<Transition>> sample_sequence(std::size_t length, Rng& rng) const;

  struct Segment {
    std::int64_t episode_id;
    std::uint64_t begin;  // absolute insertion counter of the first element
    std::uint64_t end;    // one past the last
    std::uint64_t length() const { return end - begin; }
  };
  const std::deque<Segment>& segments() const { return segments_; }
  // Element by absolute insertion counter (must be resident).
  const Transition& at_absolute(std::uint64_t abs) const;

 private:
  std::vector<Transition> buffer_;  // grows up to capacity_, then wraps
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
  std::uint64_t next_abs_ = 0;  // insertion counter of the next push
  std::deque<Segment> segments_;
};

struct OUState {
  double x = 0.0;
  double scale = 1.0;
};

// x <- x + theta (mu - x) + sigma N(0, 1), unit time step.
OUState ou_step(OUState ou, double theta, double mu, double sigma, Rng& rng);

nn::NetworkSpec actor_spec(Variant variant, const Hyperparams& hp);
nn::NetworkSpec critic_spec(const Hyperparams& hp);

// theta' <- tau theta + (1 - tau) theta', elementwise.
void soft_update(nn::ParameterSet& target, const nn::ParameterSet& source, double tau);

// Deterministic action of an actor network for a normalized observation;
// advances `state` when the actor has memory.
double policy_action(const nn::Network& actor, const env::Features& obs,
                     nn::RecurrentState* state);

class Agent {
 public:
  Agent(Variant variant, const Hyperparams& hp, std::uint64_t init_seed);
  // Adopts existing networks (all four must share the agent's layout).
  Agent(Variant variant, const Hyperparams& hp, nn::Network actor, nn::Network critic);

  // pi(s) plus scaled OU noise when exploring, clamped to [-1, 1].
  double act(const env::Features& obs, nn::RecurrentState& state, bool explore, OUState& ou,
             Rng& rng) const;

  // One critic step on a consecutive sequence; returns the pre-step loss.
  double critic_update(std::span<const Transition> batch);
  // One actor step ascending Q(s, pi(s)); returns the pre-step objective.
  double actor_update(std::span<const Transition> batch);
  void update_targets();

  nn::RecurrentState initial_state() const { return actor_.initial_state(); }
  bool has_memory() const { return actor_.spec().has_memory(); }

  Variant variant() const { return variant_; }
  const Hyperparams& hyperparams() const { return hp_; }
  nn::Network& actor() { return actor_; }
  nn::Network& critic() { return critic_; }
  nn::Network& actor_target() { return actor_target_; }
  nn::Network& critic_target() { return critic_target_; }
  const nn::Network& actor() const { return actor_; }
  const nn::Network& critic() const { return critic_; }
  const nn::Network& actor_target() const { return actor_target_; }
  const nn::Network& critic_target() const { return critic_target_; }

 private:
  nn::ForwardPass run_actor(const nn::Network& net, const nn::Matrix& states) const;

  Variant variant_;
  Hyperparams hp_;
  nn::Network actor_;
  nn::Network critic_;
  nn::Network actor_target_;
  nn::Network critic_target_;
};

struct EpisodeRecord {
  int episode = 0;
  double ret = 0.0;
  std::int64_t steps = 0;
  int collisions = 0;
  int breaches = 0;
  double min_th = 0.0;
  double noise_scale = 0.0;
};

struct TrainOptions {
  env::EnvConfig env;
  Hyperparams hp;
  bool cage_enabled = true;
  bool penalty_enabled = true;
  Variant variant = Variant::kDeep;
  std::uint64_t seed = 0;
  // When set: episode_log.csv plus checkpoints/ (periodic and final) here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpisodeRecord&)> on_episode;
};

struct TrainResult {
  std::vector<EpisodeRecord> log;
  Agent agent;
};

// Runs the full training loop. Checkpoints are staged and only published
// when the run completes.
TrainResult train(const TrainOptions& options);

// Scenario seed used by training episode `episode` of a run seeded `seed`.
std::uint64_t episode_seed(std::uint64_t seed, std::int64_t episode);

inline constexpr const char* kEpisodeLogHeader =
    "episode,return,steps,collisions,breaches,min_th,noise_scale";
void write_episode_log(const std::vector<EpisodeRecord>& log, const std::filesystem::path& path);
std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& path);

}  // namespace cagerl::ddpg
