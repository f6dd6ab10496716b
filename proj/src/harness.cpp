#include "cagerl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cagerl/config.hpp"
#include "cagerl/ddpg.hpp"
#include "cagerl/errors.hpp"
#include "cagerl/safety_cage.hpp"

namespace cagerl::harness {

namespace {

constexpr std::uint64_t kSuiteStream = 0x5e7e;

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Controllers

ActorController::ActorController(nn::Network actor, std::string label)
    : actor_(std::move(actor)), label_(std::move(label)) {
  if (actor_.spec().input_dim != static_cast<int>(env::kObservationSize) ||
      actor_.spec().output_dim != 1) {
    throw ShapeError("checkpoint is not a driving actor (expects 4 inputs, 1 output)");
  }
  memory_ = actor_.initial_state();
}

void ActorController::reset() { memory_ = actor_.initial_state(); }

double ActorController::act(const env::Observation& obs, const env::SimState&) {
  const double a = ddpg::policy_action(actor_, obs.normalized(), &memory_);
  if (!std::isfinite(a)) throw NonFiniteError("actor produced a non-finite action");
  return std::clamp(a, -1.0, 1.0);
}

double RuleFollower::act(const env::Observation& obs, const env::SimState& state) {
  const double gap = std::max(state.x_rel(), 0.0);
  const double gap_error = gap - target_th_ * state.host_vel;
  const double desired_acc = 0.1 * gap_error - 0.6 * state.v_rel();
  double pedal = desired_acc >= 0.0 ? desired_acc / env::kEngineAccel
                                    : desired_acc / (state.mu * env::kGravity);
  pedal = std::clamp(pedal, -1.0, 1.0);
  const auto verdict = cage::arbitrate(gap, state.host_vel, obs.v_rel, pedal);
  return verdict.executed_pedal;
}

// ---------------------------------------------------------------------------
// Naturalistic campaigns

Aggregate aggregate(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("aggregate: no episodes");
  Aggregate a;
  a.min_x_rel = std::numeric_limits<double>::infinity();
  a.min_th = std::numeric_limits<double>::infinity();
  a.max_v_rel = -std::numeric_limits<double>::infinity();
  for (const auto& e : episodes) {
    a.min_x_rel = std::min(a.min_x_rel, e.min_x_rel);
    a.min_th = std::min(a.min_th, e.min_th);
    a.max_v_rel = std::max(a.max_v_rel, e.max_v_rel);
    a.mean_x_rel += e.mean_x_rel;
    a.mean_v_rel += e.mean_v_rel;
    a.mean_th += e.mean_th;
    a.collisions += e.collision ? 1 : 0;
  }
  const double n = static_cast<double>(episodes.size());
  a.mean_x_rel /= n;
  a.mean_v_rel /= n;
  a.mean_th /= n;
  return a;
}

std::uint64_t scenario_seed(std::uint64_t seed, int index) {
  return derive_seed(seed, kSuiteStream, static_cast<std::uint64_t>(index));
}

std::string campaign_hash(const env::EnvConfig& env, const CampaignOptions& options) {
  std::string text = config::env_ini(env);
  text += "episodes = " + std::to_string(options.episodes) + "\n";
  text += "episode_steps = " + std::to_string(options.episode_steps) + "\n";
  text += "cage_enabled = " + std::string(options.cage_enabled ? "true" : "false") + "\n";
  text += "seed = " + std::to_string(options.seed) + "\n";
  return config::fnv1a_hex(text);
}

EpisodeMetrics run_episode(Controller& controller, const env::EnvConfig& env_config,
                           std::uint64_t seed, bool cage_enabled, int episode_index) {
  env::Environment environment(env_config);
  env::Observation obs = environment.reset(seed);
  controller.reset();

  EpisodeMetrics m;
  m.episode = episode_index;
  m.min_x_rel = std::numeric_limits<double>::infinity();
  m.min_th = std::numeric_limits<double>::infinity();
  double sum_x = 0.0, sum_v = 0.0, sum_th = 0.0;
  while (true) {
    const double pedal = std::clamp(controller.act(obs, environment.state()), -1.0, 1.0);
    const env::StepResult& res = environment.step(pedal, cage_enabled);
    obs = res.observation;
    const double x_rel = std::max(environment.state().x_rel(), 0.0);
    const double v_rel = std::abs(obs.v_rel);
    m.min_x_rel = std::min(m.min_x_rel, x_rel);
    m.max_v_rel = std::max(m.max_v_rel, v_rel);
    m.min_th = std::min(m.min_th, obs.th);
    sum_x += x_rel;
    sum_v += v_rel;
    sum_th += obs.th;
    ++m.steps;
    if (res.done) {
      m.collision = res.collision;
      break;
    }
  }
  const double n = static_cast<double>(m.steps);
  m.mean_x_rel = sum_x / n;
  m.mean_v_rel = sum_v / n;
  m.mean_th = sum_th / n;
  if (m.collision) {
    m.min_x_rel = 0.0;
    m.min_th = 0.0;
  }
  return m;
}

CampaignSummary run_naturalistic(Controller& controller, const env::EnvConfig& env,
                                 const CampaignOptions& options,
                                 const std::function<void(const EpisodeMetrics&)>& on_episode) {
  if (options.episodes <= 0) throw ConfigError("campaign episodes must be > 0");
  env::EnvConfig env_config = env;
  env_config.episode_max_steps = options.episode_steps;
  env_config.validate();

  CampaignSummary summary;
  summary.label = controller.label();
  summary.config_hash = campaign_hash(env_config, options);
  for (int i = 0; i < options.episodes; ++i) {
    summary.episodes.push_back(run_episode(controller, env_config,
                                           scenario_seed(options.seed, i),
                                           options.cage_enabled, i));
    if (on_episode) on_episode(summary.episodes.back());
  }
  summary.total = aggregate(summary.episodes);
  return summary;
}

void write_metrics(const std::vector<EpisodeMetrics>& episodes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics log " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& e : episodes) {
    out << e.episode << ',' << e.steps << ',' << (e.collision ? 1 : 0) << ',' << fmt(e.min_x_rel)
        << ',' << fmt(e.mean_x_rel) << ',' << fmt(e.max_v_rel) << ',' << fmt(e.mean_v_rel) << ','
        << fmt(e.min_th) << ',' << fmt(e.mean_th) << '\n';
  }
}

std::vector<EpisodeMetrics> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kMetricsHeader) {
    throw std::runtime_error("not a metrics log (bad header): " + path.string());
  }
  std::vector<EpisodeMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpisodeMetrics e;
    long long steps = 0;
    int collision = 0;
    if (std::sscanf(line.c_str(), "%d,%lld,%d,%lf,%lf,%lf,%lf,%lf,%lf", &e.episode, &steps,
                    &collision, &e.min_x_rel, &e.mean_x_rel, &e.max_v_rel, &e.mean_v_rel,
                    &e.min_th, &e.mean_th) != 9) {
      throw std::runtime_error("malformed metrics row: " + line);
    }
    e.steps = steps;
    e.collision = collision != 0;
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curves

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window <= 0) throw std::invalid_argument("moving_average: window must be > 0");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= static_cast<std::size_t>(window)) sum -= values[i - window];
    const auto count = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

std::optional<int> episodes_to_threshold(const std::vector<double>& returns, double threshold,
                                         int window) {
  const auto avg = moving_average(returns, window);
  for (std::size_t i = 0; i < avg.size(); ++i) {
    if (i + 1 >= static_cast<std::size_t>(window) && avg[i] >= threshold) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

AdversarialCurves combine_runs(std::vector<std::vector<adversary::AdversaryEpisode>> runs,
                               int smoothing_window) {
  if (runs.empty()) throw std::invalid_argument("combine_runs: no runs");
  const std::size_t n = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != n) throw std::invalid_argument("combine_runs: runs differ in length");
  }
  AdversarialCurves c;
  c.mean_min_th.resize(n);
  c.std_min_th.resize(n);
  const double k = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r[i].min_th;
    const double mean = sum / k;
    double var = 0.0;
    for (const auto& r : runs) var += (r[i].min_th - mean) * (r[i].min_th - mean);
    c.mean_min_th[i] = mean;
    c.std_min_th[i] = std::sqrt(var / k);
  }
  for (const auto& r : runs) {
    for (const auto& e : r) c.total_collisions += e.collisions;
  }
  c.smoothed_mean = moving_average(c.mean_min_th, smoothing_window);
  c.smoothed_std = moving_average(c.std_min_th, smoothing_window);
  c.runs = std::move(runs);
  return c;
}

AdversarialCurves run_adversarial(
    const nn::Network& host, const env::EnvConfig& env, const AdversarialOptions& options,
    const std::function<void(int, const adversary::AdversaryEpisode&)>& on_episode,
    std::vector<adversary::AdversaryPolicy>* policies) {
  if (options.runs <= 0) throw ConfigError("adversarial runs must be > 0");
  std::vector<std::vector<adversary::AdversaryEpisode>> logs;
  for (int run = 0; run < options.runs; ++run) {
    std::function<void(const adversary::AdversaryEpisode&)> cb;
    if (on_episode) cb = [&](const adversary::AdversaryEpisode& e) { on_episode(run, e); };
    auto result = adversary::adversary_train(host, env, options.adversary, run, cb);
    logs.push_back(std::move(result.log));
    if (policies != nullptr) policies->push_back(std::move(result.policy));
  }
  return combine_runs(std::move(logs), options.smoothing_window);
}

void write_curves(const AdversarialCurves& curves, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write curves " + path.string());
  out << kCurvesHeader << '\n';
  for (std::size_t i = 0; i < curves.mean_min_th.size(); ++i) {
    out << i << ',' << fmt(curves.mean_min_th[i]) << ',' << fmt(curves.std_min_th[i]) << ','
        << fmt(curves.smoothed_mean[i]) << ',' << fmt(curves.smoothed_std[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Tables

namespace {

struct Row {
  const char* name;
  double Aggregate::*field;
};

constexpr Row kRows[] = {
    {"min. x_rel [m]", &Aggregate::min_x_rel}, {"mean x_rel [m]", &Aggregate::mean_x_rel},
    {"max. v_rel [m/s]", &Aggregate::max_v_rel}, {"mean v_rel [m/s]", &Aggregate::mean_v_rel},
    {"min. TH [s]", &Aggregate::min_th},         {"mean TH [s]", &Aggregate::mean_th},
};

void require_columns(const std::vector<CampaignSummary>& columns) {
  if (columns.empty()) throw std::invalid_argument("summary: no campaigns given");
}

}  // namespace

std::string summary_table(const std::vector<CampaignSummary>& columns) {
  require_columns(columns);
  std::size_t width = 18;
  for (const auto& c : columns) width = std::max(width, c.label.size() + 2);
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-18s", "");
  out << buf;
  for (const auto& c : columns) {
    out << std::string(width - c.label.size(), ' ') << c.label;
  }
  out << '\n';
  for (const auto& row : kRows) {
    std::snprintf(buf, sizeof(buf), "%-18s", row.name);
    out << buf;
    for (const auto& c : columns) {
      const std::string v = fmt(c.total.*row.field, "%.3f");
      out << std::string(width - v.size(), ' ') << v;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%-18s", "collisions");
  out << buf;
  for (const auto& c : columns) {
    const std::string v = std::to_string(c.total.collisions);
    out << std::string(width - v.size(), ' ') << v;
  }
  out << '\n';
  return out.str();
}

std::string summary_csv(const std::vector<CampaignSummary>& columns) {
  require_columns(columns);
  std::ostringstream out;
  out << "metric";
  for (const auto& c : columns) out << ',' << c.label;
  out << '\n';
  for (const auto& row : kRows) {
    out << row.name;
    for (const auto& c : columns) out << ',' << fmt(c.total.*row.field);
    out << '\n';
  }
  out << "collisions";
  for (const auto& c : columns) out << ',' << c.total.collisions;
  out << '\n';
  return out.str();
}

}  // namespace cagerl::harness
