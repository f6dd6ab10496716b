#include "cagerl/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cagerl/ddpg.hpp"
#include "cagerl/errors.hpp"

namespace cagerl::adversary {

namespace {

constexpr std::uint64_t kRunStream = 0xad5e;
constexpr std::uint64_t kInitStream = 0xad17;
constexpr std::uint64_t kScenarioStream = 0xad5c;

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid adversary config: " + field + " " + why);
}

}  // namespace

void AdversaryConfig::validate() const {
  require(vel_range.lo >= 0.0 && vel_range.lo <= vel_range.hi, "vel_range",
          "must be ordered and non-negative");
  require(acc_bounds.lo < acc_bounds.hi, "acc_bounds", "must satisfy lo < hi");
  require(episodes > 0, "episodes", "must be > 0");
  require(episode_steps > 0, "episode_steps", "must be > 0");
  require(n_step > 0, "n_step", "must be > 0");
  require(hidden_width > 0, "hidden_width", "must be > 0");
  require(entropy_coef >= 0.0, "entropy_coef", "must be >= 0");
  require(value_coef >= 0.0, "value_coef", "must be >= 0");
  require(lr >= 0.0, "lr", "must be >= 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
  require(grad_clip > 0.0, "grad_clip", "must be > 0");
  require(log_std_min < log_std_max, "log_std_min", "must be below log_std_max");
}

double adversary_reward(double th) {
  if (th < 0.0) throw DomainError("adversary_reward: negative headway");
  if (th <= 1.0 / kRewardCap) return kRewardCap;
  return std::min(1.0 / th, kRewardCap);
}

env::Features adversary_observation(const env::SimState& s) {
  return {s.lead_vel / 40.0, s.host_vel / 40.0, s.x_rel() / 100.0, s.v_rel() / 20.0};
}

nn::NetworkSpec AdversaryPolicy::default_spec(const AdversaryConfig& config) {
  nn::NetworkSpec spec;
  spec.input_dim = static_cast<int>(env::kObservationSize);
  const nn::LayerSpec dense{nn::LayerKind::kDense, config.hidden_width, nn::Activation::kRelu};
  spec.hidden = {dense, dense};
  spec.output_dim = 3;
  spec.output_activation = nn::Activation::kLinear;
  return spec;
}

AdversaryPolicy::AdversaryPolicy(const AdversaryConfig& config, std::uint64_t init_seed)
    : config_(config) {
  Rng rng(init_seed);
  net_ = nn::Network(default_spec(config), rng, 0.1);
}

AdversaryPolicy::AdversaryPolicy(const AdversaryConfig& config, nn::Network net)
    : config_(config), net_(std::move(net)) {
  if (net_.spec().output_dim != 3 || net_.spec().has_memory() ||
      net_.spec().input_dim != static_cast<int>(env::kObservationSize)) {
    throw ShapeError("adversary network must map 4 features to [mean, log_std, value]");
  }
}

AdversaryPolicy::Head AdversaryPolicy::evaluate(const env::Features& obs) const {
  const nn::Matrix x = Eigen::Map<const nn::Vector>(obs.data(), obs.size());
  const nn::Matrix out = net_.forward(x).output();
  return {out(0, 0), std::clamp(out(1, 0), config_.log_std_min, config_.log_std_max),
          out(2, 0)};
}

double AdversaryPolicy::squash(double raw) const {
  const double mid = 0.5 * (config_.acc_bounds.lo + config_.acc_bounds.hi);
  const double half = 0.5 * (config_.acc_bounds.hi - config_.acc_bounds.lo);
  return std::clamp(mid + half * std::tanh(raw), config_.acc_bounds.lo, config_.acc_bounds.hi);
}

AdversaryPolicy::Sample AdversaryPolicy::sample(const env::Features& obs, Rng& rng) const {
  Sample s;
  s.head = evaluate(obs);
  s.raw = s.head.mean + std::exp(s.head.log_std) * rng.normal();
  s.action = squash(s.raw);
  return s;
}

double AdversaryPolicy::mean_action(const env::Features& obs) const {
  return squash(evaluate(obs).mean);
}

std::vector<double> nstep_returns(std::span<const AdversaryStep> segment, double bootstrap_value,
                                  bool terminal, double gamma) {
  std::vector<double> out(segment.size());
  double running = terminal ? 0.0 : bootstrap_value;
  for (std::size_t k = segment.size(); k-- > 0;) {
    running = segment[k].reward + gamma * running;
    out[k] = running;
  }
  return out;
}

A2cLosses a2c_update(AdversaryPolicy& policy, std::span<const AdversaryStep> segment,
                     double bootstrap_value, bool terminal) {
  if (segment.empty()) throw UsageError("a2c_update: empty segment");
  const AdversaryConfig& cfg = policy.config();
  nn::Network& net = policy.network();
  const auto n = static_cast<Eigen::Index>(segment.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  nn::Matrix x(env::kObservationSize, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < env::kObservationSize; ++k) x(k, j) = segment[j].obs[k];
  }
  const nn::ForwardPass pass = net.forward(x);
  const nn::Matrix& out = pass.output();
  const auto returns = nstep_returns(segment, bootstrap_value, terminal, cfg.gamma);

  A2cLosses losses;
  nn::Matrix grad = nn::Matrix::Zero(3, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mean = out(0, j);
    const double raw_log_std = out(1, j);
    const double log_std = std::clamp(raw_log_std, cfg.log_std_min, cfg.log_std_max);
    const double std_dev = std::exp(log_std);
    const double value = out(2, j);
    const double ret = returns[static_cast<std::size_t>(j)];
    const double advantage = ret - value;  // treated as a constant below
    const double z = (segment[j].raw - mean) / std_dev;
    const double log_prob = -0.5 * z * z - log_std - kHalfLog2Pi;

    losses.policy += -advantage * log_prob * inv_n;
    losses.value += (ret - value) * (ret - value) * inv_n;
    losses.entropy += (log_std + kHalfLog2Pi + 0.5) * inv_n;

    grad(0, j) = -advantage * z / std_dev * inv_n;
    const bool log_std_free = raw_log_std > cfg.log_std_min && raw_log_std < cfg.log_std_max;
    grad(1, j) = log_std_free ? (-advantage * (z * z - 1.0) - cfg.entropy_coef) * inv_n : 0.0;
    grad(2, j) = -2.0 * cfg.value_coef * (ret - value) * inv_n;
  }
  if (!std::isfinite(losses.policy) || !std::isfinite(losses.value)) {
    throw NonFiniteError("a2c_update: non-finite loss");
  }

  net.params().zero_grad();
  net.backward(pass, grad);
  nn::clip_global_norm(net.params(), cfg.grad_clip);
  nn::optimizer_step(net.params(), cfg.lr);
  return losses;
}

std::uint64_t run_seed(std::uint64_t seed, int run_id) {
  return derive_seed(seed, kRunStream, static_cast<std::uint64_t>(run_id));
}

AdversaryRun adversary_train(const nn::Network& host, const env::EnvConfig& base_env,
                             const AdversaryConfig& config, int run_id,
                             const std::function<void(const AdversaryEpisode&)>& on_episode) {
  config.validate();
  if (host.spec().input_dim != static_cast<int>(env::kObservationSize) ||
      host.spec().output_dim != 1) {
    throw ShapeError("adversary_train: host checkpoint is not a driving actor");
  }
  env::EnvConfig env_config = base_env;
  env_config.lead_vel_range = config.vel_range;
  env_config.episode_max_steps = config.episode_steps;

  const std::uint64_t seed = run_seed(config.seed, run_id);
  Rng rng(seed);
  AdversaryRun run{{}, AdversaryPolicy(config, derive_seed(seed, kInitStream))};
  env::Environment environment(env_config);
  std::vector<AdversaryStep> segment;
  segment.reserve(static_cast<std::size_t>(config.n_step));

  for (int episode = 0; episode < config.episodes; ++episode) {
    AdversaryEpisode rec;
    rec.episode = episode;
    env::Observation obs = environment.reset(derive_seed(seed, kScenarioStream, episode),
                                             env::LeadMode::kAdversarialExternal);
    nn::RecurrentState host_state = host.initial_state();
    rec.min_th = obs.th;
    segment.clear();

    while (true) {
      const double pedal =
          std::clamp(ddpg::policy_action(host, obs.normalized(), &host_state), -1.0, 1.0);
      const env::Features adv_obs = adversary_observation(environment.state());
      const auto sample = run.policy.sample(adv_obs, rng);
      const env::StepResult& res = environment.step(pedal, /*cage_enabled=*/false, sample.action);
      obs = res.observation;
      const double reward = adversary_reward(obs.th);
      segment.push_back({adv_obs, sample.raw, sample.action, reward, sample.head.value});
      rec.ret += reward;
      rec.min_th = std::min(rec.min_th, obs.th);

      if (res.done || segment.size() == static_cast<std::size_t>(config.n_step)) {
        const bool terminal = res.collision;
        const double bootstrap =
            terminal ? 0.0
                     : run.policy.evaluate(adversary_observation(environment.state())).value;
        a2c_update(run.policy, segment, bootstrap, terminal);
        segment.clear();
      }
      if (res.done) {
        rec.collisions = res.collision ? 1 : 0;
        break;
      }
    }
    run.log.push_back(rec);
    if (on_episode) on_episode(rec);
  }
  return run;
}

void write_adversary_log(const std::vector<AdversaryEpisode>& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write adversary log " + path.string());
  out << kAdversaryLogHeader << '\n';
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%.17g\n", e.episode, e.min_th, e.collisions,
                  e.ret);
    out << buf;
  }
}

std::vector<AdversaryEpisode> read_adversary_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read adversary log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kAdversaryLogHeader) {
    throw std::runtime_error("not an adversary log (bad header): " + path.string());
  }
  std::vector<AdversaryEpisode> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AdversaryEpisode e;
    if (std::sscanf(line.c_str(), "%d,%lf,%d,%lf", &e.episode, &e.min_th, &e.collisions,
                    &e.ret) != 4) {
      throw std::runtime_error("malformed adversary log row: " + line);
    }
    log.push_back(e);
  }
  return log;
}

}  // namespace cagerl::adversary
