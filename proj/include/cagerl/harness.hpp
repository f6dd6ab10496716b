#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cagerl/adversary.hpp"
#include "cagerl/env.hpp"
#include "cagerl/nn.hpp"

// Evaluation campaigns: naturalistic batteries, adversarial batteries and
// their aggregation into summary tables.
namespace cagerl::harness {

// Closed-loop driving controller evaluated by the campaigns.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string label() const = 0;
  // Called at the start of every episode.
  virtual void reset() {}
  // Pedal in [-1, 1] for the current state.
  virtual double act(const env::Observation& obs, const env::SimState& state) = 0;
};

// Deterministic actor network; recurrent memory restarts every episode.
class ActorController : public Controller {
 public:
  ActorController(nn::Network actor, std::string label);
  std::string label() const override { return label_; }
  void reset() override;
  double act(const env::Observation& obs, const env::SimState& state) override;

 private:
  nn::Network actor_;
  nn::RecurrentState memory_;
  std::string label_;
};

// Hand-written follower that tracks the target headway and always obeys the
// safety cage's braking demand.
class RuleFollower : public Controller {
 public:
  explicit RuleFollower(double target_th = 2.0) : target_th_(target_th) {}
  std::string label() const override { return "rule_follower"; }
  double act(const env::Observation& obs, const env::SimState& state) override;

 private:
  double target_th_;
};

class FullGas : public Controller {
 public:
  std::string label() const override { return "full_gas"; }
  double act(const env::Observation&, const env::SimState&) override { return 1.0; }
};

// Table-style metrics of one evaluation episode. v_rel statistics use |v_rel|.
struct EpisodeMetrics {
  int episode = 0;
  std::int64_t steps = 0;
  bool collision = false;
  double min_x_rel = 0.0;
  double mean_x_rel = 0.0;
  double max_v_rel = 0.0;
  double mean_v_rel = 0.0;
  double min_th = 0.0;
  double mean_th = 0.0;
};

struct Aggregate {
  double min_x_rel = 0.0;   // min of mins
  double mean_x_rel = 0.0;  // mean of means
  double max_v_rel = 0.0;   // max of maxes
  double mean_v_rel = 0.0;
  double min_th = 0.0;
  double mean_th = 0.0;
  int collisions = 0;
};

// Throws std::invalid_argument on an empty list.
Aggregate aggregate(const std::vector<EpisodeMetrics>& episodes);

struct CampaignSummary {
  std::string label;
  std::string config_hash;
  std::vector<EpisodeMetrics> episodes;
  Aggregate total;
};

struct CampaignOptions {
  int episodes = 120;
  std::int64_t episode_steps = 7500;  // 5 min at 25 Hz
  bool cage_enabled = false;
  std::uint64_t seed = 0;
  bool operator==(const CampaignOptions&) const = default;
};

// Seed of scenario `index` of the suite generated from `seed`.
std::uint64_t scenario_seed(std::uint64_t seed, int index);

// Hash identifying the scenario suite (environment + campaign options).
std::string campaign_hash(const env::EnvConfig& env, const CampaignOptions& options);

// Runs one episode of the scenario suite and measures it.
EpisodeMetrics run_episode(Controller& controller, const env::EnvConfig& env, std::uint64_t seed,
                           bool cage_enabled, int episode_index = 0);

// Lead traces depend only on the scenario seed, so every controller meets the
// same suite.
CampaignSummary run_naturalistic(Controller& controller, const env::EnvConfig& env,
                                 const CampaignOptions& options,
                                 const std::function<void(const EpisodeMetrics&)>& on_episode = {});

inline constexpr const char* kMetricsHeader =
    "episode,steps,collision,min_x_rel,mean_x_rel,max_v_rel,mean_v_rel,min_th,mean_th";
void write_metrics(const std::vector<EpisodeMetrics>& episodes, const std::filesystem::path& path);
std::vector<EpisodeMetrics> read_metrics(const std::filesystem::path& path);

// Trailing moving average; the first window-1 entries average what exists.
std::vector<double> moving_average(const std::vector<double>& values, int window);

// First episode whose trailing moving average reaches `threshold`.
std::optional<int> episodes_to_threshold(const std::vector<double>& returns, double threshold,
                                         int window);

struct AdversarialCurves {
  std::vector<std::vector<adversary::AdversaryEpisode>> runs;
  std::vector<double> mean_min_th;  // per episode, across runs
  std::vector<double> std_min_th;   // population std across runs
  std::vector<double> smoothed_mean;
  std::vector<double> smoothed_std;
  int total_collisions = 0;
};

// Per-episode statistics across runs; each log must have the same length.
AdversarialCurves combine_runs(std::vector<std::vector<adversary::AdversaryEpisode>> runs,
                               int smoothing_window);

struct AdversarialOptions {
  adversary::AdversaryConfig adversary;
  int runs = 3;
  int smoothing_window = 50;
};

// Trains `runs` independent adversaries against the frozen host (no cage).
AdversarialCurves run_adversarial(
    const nn::Network& host, const env::EnvConfig& env, const AdversarialOptions& options,
    const std::function<void(int run, const adversary::AdversaryEpisode&)>& on_episode = {},
    std::vector<adversary::AdversaryPolicy>* policies = nullptr);

inline constexpr const char* kCurvesHeader = "episode,mean_min_th,std_min_th,smoothed_mean,smoothed_std";
void write_curves(const AdversarialCurves& curves, const std::filesystem::path& path);

// Seven-row comparison table, one column per campaign.
std::string summary_table(const std::vector<CampaignSummary>& columns);
std::string summary_csv(const std::vector<CampaignSummary>& columns);

}  // namespace cagerl::harness
