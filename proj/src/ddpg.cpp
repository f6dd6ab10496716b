#include "cagerl/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cagerl/errors.hpp"

namespace cagerl::ddpg {

namespace {

constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kTrainStream = 0x7a19;
constexpr std::uint64_t kScenarioStream = 0x5ce9;

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid ddpg hyperparameter: " + field + " " + why);
}

struct Batch {
  nn::Matrix s, a, s_next;
  Eigen::RowVectorXd r, not_done;
};

Batch pack(std::span<const Transition> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Batch b;
  b.s.resize(env::kObservationSize, n);
  b.s_next.resize(env::kObservationSize, n);
  b.a.resize(1, n);
  b.r.resize(n);
  b.not_done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = batch[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < env::kObservationSize; ++k) {
      b.s(k, j) = t.s[k];
      b.s_next(k, j) = t.s_next[k];
    }
    b.a(0, j) = t.a;
    b.r(j) = t.r;
    b.not_done(j) = t.done ? 0.0 : 1.0;
  }
  return b;
}

nn::Matrix stack(const nn::Matrix& states, const nn::Matrix& actions) {
  nn::Matrix x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::kDeep ? "deep" : "shallow"; }

Variant parse_variant(const std::string& s) {
  if (s == "deep") return Variant::kDeep;
  if (s == "shallow") return Variant::kShallow;
  throw ConfigError("unknown variant '" + s + "' (expected deep or shallow)");
}

void Hyperparams::validate() const {
  require(batch_size > 0, "batch_size", "must be > 0");
  require(hidden_width > 0, "hidden_width", "must be > 0");
  require(lstm_units > 0, "lstm_units", "must be > 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
  require(lr_actor >= 0.0, "lr_actor", "must be >= 0");
  require(lr_critic >= 0.0, "lr_critic", "must be >= 0");
  require(replay_capacity >= static_cast<std::size_t>(batch_size), "replay_capacity",
          "must hold at least one batch");
  require(tau > 0.0 && tau <= 1.0, "tau", "must lie in (0, 1]");
  require(noise_scale_init > 0.0 && noise_scale_init <= 1.0, "noise_scale_init",
          "must lie in (0, 1]");
  require(noise_decay > 0.0 && noise_decay <= 1.0, "noise_decay", "must lie in (0, 1]");
  require(grad_clip > 0.0, "grad_clip", "must be > 0");
  require(ou_theta >= 0.0, "ou_theta", "must be >= 0");
  require(ou_sigma >= 0.0, "ou_sigma", "must be >= 0");
  require(episodes > 0, "episodes", "must be > 0");
  require(warmup_steps >= 0, "warmup_steps", "must be >= 0");
  require(update_every > 0, "update_every", "must be > 0");
  require(checkpoint_every >= 0, "checkpoint_every", "must be >= 0");
}

// ---------------------------------------------------------------------------
// ReplayMemory

ReplayMemory::ReplayMemory(std::size_t capacity) {
  if (capacity == 0) throw ConfigError("replay memory capacity must be > 0");
  buffer_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  capacity_ = capacity;
}

const Transition& ReplayMemory::at_absolute(std::uint64_t abs) const {
  if (abs >= next_abs_ || abs < next_abs_ - size_) {
    throw UsageError("replay memory: element is not resident");
  }
  return buffer_[abs % capacity_];
}

void ReplayMemory::push(const Transition& t) {
  if (!segments_.empty() && segments_.back().episode_id == t.episode_id &&
      segments_.back().end == next_abs_) {
    const Transition& prev = at_absolute(next_abs_ - 1);
    if (t.step_index != prev.step_index + 1) {
      throw UsageError("replay memory: non-consecutive step within episode " +
                       std::to_string(t.episode_id));
    }
  }
  if (size_ == capacity_) {
    Segment& oldest = segments_.front();
    ++oldest.begin;
    if (oldest.length() == 0) segments_.pop_front();
    --size_;
  }
  const std::size_t slot = next_abs_ % capacity_;
  if (slot < buffer_.size()) {
    buffer_[slot] = t;
  } else {
    buffer_.push_back(t);
  }
  if (!segments_.empty() && segments_.back().episode_id == t.episode_id &&
      segments_.back().end == next_abs_) {
    ++segments_.back().end;
  } else {
    segments_.push_back({t.episode_id, next_abs_, next_abs_ + 1});
  }
  ++next_abs_;
  ++size_;
}

bool ReplayMemory::ready(std::size_t length) const {
  return std::any_of(segments_.begin(), segments_.end(),
                     [&](const Segment& s) { return s.length() >= length; });
}

std::optional<std::vector<Transition>> ReplayMemory::sample_sequence(std::size_t length,
                                                                     Rng& rng) const {
  if (length == 0) return std::vector<Transition>{};
  std::uint64_t starts = 0;
  for (const auto& s : segments_) {
    if (s.length() >= length) starts += s.length() - length + 1;
  }
  if (starts == 0) return std::nullopt;
  std::uint64_t pick = rng.below(starts);
  for (const auto& s : segments_) {
    if (s.length() < length) continue;
    const std::uint64_t here = s.length() - length + 1;
    if (pick >= here) {
      pick -= here;
      continue;
    }
    std::vector<Transition> out;
    out.reserve(length);
    for (std::uint64_t k = 0; k < length; ++k) out.push_back(at_absolute(s.begin + pick + k));
    return out;
  }
  return std::nullopt;  // unreachable
}

// ---------------------------------------------------------------------------
// Exploration, networks, targets

OUState ou_step(OUState ou, double theta, double mu, double sigma, Rng& rng) {
  ou.x = ou.x + theta * (mu - ou.x) + sigma * rng.normal();
  return ou;
}

nn::NetworkSpec actor_spec(Variant variant, const Hyperparams& hp) {
  nn::NetworkSpec spec;
  spec.input_dim = static_cast<int>(env::kObservationSize);
  spec.output_dim = 1;
  spec.output_activation = nn::Activation::kTanh;
  const nn::LayerSpec dense{nn::LayerKind::kDense, hp.hidden_width, nn::Activation::kRelu};
  if (variant == Variant::kDeep) {
    spec.hidden = {dense, dense, dense, {nn::LayerKind::kLstm, hp.lstm_units}};
  } else {
    spec.hidden = {dense};
  }
  return spec;
}

nn::NetworkSpec critic_spec(const Hyperparams& hp) {
  nn::NetworkSpec spec;
  spec.input_dim = static_cast<int>(env::kObservationSize) + 1;
  spec.hidden = {{nn::LayerKind::kDense, hp.hidden_width, nn::Activation::kRelu}};
  spec.output_dim = 1;
  spec.output_activation = nn::Activation::kLinear;
  return spec;
}

void soft_update(nn::ParameterSet& target, const nn::ParameterSet& source, double tau) {
  target.check_same_layout(source);
  for (std::size_t i = 0; i < target.size(); ++i) {
    nn::Matrix& t = target.mutable_value(i);
    t = tau * source[i].value + (1.0 - tau) * t;
  }
}

double policy_action(const nn::Network& actor, const env::Features& obs,
                     nn::RecurrentState* state) {
  const nn::Matrix x = Eigen::Map<const nn::Vector>(obs.data(), obs.size());
  return actor.forward(x, actor.spec().has_memory() ? state : nullptr).output()(0, 0);
}

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(Variant variant, const Hyperparams& hp, std::uint64_t init_seed)
    : variant_(variant), hp_(hp) {
  Rng rng(init_seed);
  // Small output weights keep the initial actions near zero.
  actor_ = nn::Network(actor_spec(variant, hp), rng, 0.1);
  critic_ = nn::Network(critic_spec(hp), rng);
  actor_target_ = actor_;
  critic_target_ = critic_;
}

Agent::Agent(Variant variant, const Hyperparams& hp, nn::Network actor, nn::Network critic)
    : variant_(variant), hp_(hp), actor_(std::move(actor)), critic_(std::move(critic)) {
  nn::Network::make_layout(actor_spec(variant, hp)).check_same_layout(actor_.params());
  nn::Network::make_layout(critic_spec(hp)).check_same_layout(critic_.params());
  actor_target_ = actor_;
  critic_target_ = critic_;
}

double Agent::act(const env::Features& obs, nn::RecurrentState& state, bool explore,
                  OUState& ou, Rng& rng) const {
  double a = policy_action(actor_, obs, &state);
  if (explore) {
    ou = ou_step(ou, hp_.ou_theta, hp_.ou_mu, hp_.ou_sigma, rng);
    a += ou.scale * ou.x;
  }
  if (!std::isfinite(a)) throw NonFiniteError("actor produced a non-finite action");
  return std::clamp(a, -1.0, 1.0);
}

nn::ForwardPass Agent::run_actor(const nn::Network& net, const nn::Matrix& states) const {
  if (!net.spec().has_memory()) return net.forward(states);
  // Sequences always start from a zeroed memory.
  nn::RecurrentState rs = net.initial_state();
  return net.forward(states, &rs);
}

double Agent::critic_update(std::span<const Transition> batch) {
  if (batch.empty()) throw UsageError("critic_update: empty batch");
  const Batch b = pack(batch);
  const double n = static_cast<double>(batch.size());

  const bool use_targets = hp_.target_mode == TargetMode::kTargetNetworks;
  const nn::Network& next_actor = use_targets ? actor_target_ : actor_;
  const nn::Network& next_critic = use_targets ? critic_target_ : critic_;
  const nn::Matrix next_a = run_actor(next_actor, b.s_next).output();
  const nn::Matrix next_q = next_critic.forward(stack(b.s_next, next_a)).output();
  const Eigen::RowVectorXd y =
      b.r + hp_.gamma * b.not_done.cwiseProduct(next_q.row(0));

  const nn::ForwardPass pass = critic_.forward(stack(b.s, b.a));
  const nn::Matrix diff = pass.output().row(0) - y;
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) throw NonFiniteError("critic_update: non-finite loss");

  critic_.params().zero_grad();
  critic_.backward(pass, (2.0 / n) * diff);
  nn::clip_global_norm(critic_.params(), hp_.grad_clip);
  nn::optimizer_step(critic_.params(), hp_.lr_critic, {.kind = hp_.optimizer});
  return loss;
}

double Agent::actor_update(std::span<const Transition> batch) {
  if (batch.empty()) throw UsageError("actor_update: empty batch");
  const Batch b = pack(batch);
  const double n = static_cast<double>(batch.size());

  const nn::ForwardPass actor_pass = run_actor(actor_, b.s);
  const nn::ForwardPass critic_pass = critic_.forward(stack(b.s, actor_pass.output()));
  const double objective = critic_pass.output().mean();
  if (!std::isfinite(objective)) throw NonFiniteError("actor_update: non-finite objective");

  // Gradient ascent on mean Q: feed -1/n and leave critic gradients alone.
  const nn::Matrix dq = nn::Matrix::Constant(1, batch.size(), -1.0 / n);
  const nn::Matrix dx = critic_.backward(critic_pass, dq, /*accumulate_param_grads=*/false);
  const nn::Matrix da = dx.bottomRows(1);

  actor_.params().zero_grad();
  actor_.backward(actor_pass, da);
  nn::clip_global_norm(actor_.params(), hp_.grad_clip);
  nn::optimizer_step(actor_.params(), hp_.lr_actor, {.kind = hp_.optimizer});
  return objective;
}

void Agent::update_targets() {
  soft_update(actor_target_.params(), actor_.params(), hp_.tau);
  soft_update(critic_target_.params(), critic_.params(), hp_.tau);
}

// ---------------------------------------------------------------------------
// Training loop

std::uint64_t episode_seed(std::uint64_t seed, std::int64_t episode) {
  return derive_seed(seed, kScenarioStream, static_cast<std::uint64_t>(episode));
}

void write_episode_log(const std::vector<EpisodeRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write episode log " + path.string());
  out << kEpisodeLogHeader << '\n';
  for (const auto& e : log) {
    out << e.episode << ',' << fmt_double(e.ret) << ',' << e.steps << ',' << e.collisions << ','
        << e.breaches << ',' << fmt_double(e.min_th) << ',' << fmt_double(e.noise_scale) << '\n';
  }
}

std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read episode log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kEpisodeLogHeader) {
    throw std::runtime_error("not an episode log (bad header): " + path.string());
  }
  std::vector<EpisodeRecord> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    EpisodeRecord e;
    char c1, c2, c3, c4, c5, c6;
    row >> e.episode >> c1 >> e.ret >> c2 >> e.steps >> c3 >> e.collisions >> c4 >> e.breaches >>
        c5 >> e.min_th >> c6 >> e.noise_scale;
    if (!row) throw std::runtime_error("malformed episode log row: " + line);
    log.push_back(e);
  }
  return log;
}

namespace {

void save_agent(const Agent& agent, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(agent.actor(), dir / "actor.ckpt");
  nn::save_checkpoint(agent.critic(), dir / "critic.ckpt");
  nn::save_checkpoint(agent.actor_target(), dir / "actor_target.ckpt");
  nn::save_checkpoint(agent.critic_target(), dir / "critic_target.ckpt");
}

void write_diagnostic(const std::filesystem::path& path, const std::string& what, int episode,
                      std::int64_t step, const env::SimState& state) {
  nlohmann::json j;
  j["error"] = what;
  j["episode"] = episode;
  j["step"] = step;
  j["state"] = {{"t", state.t},           {"host_vel", state.host_vel},
                {"host_acc", state.host_acc}, {"lead_vel", state.lead_vel},
                {"x_rel", state.x_rel()},   {"mu", state.mu}};
  std::ofstream(path) << j.dump(2) << '\n';
}

std::string episode_dir_name(int episode) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep_%05d", episode);
  return buf;
}

}  // namespace

TrainResult train(const TrainOptions& options) {
  options.env.validate();
  options.hp.validate();
  const Hyperparams& hp = options.hp;

  std::optional<std::filesystem::path> staging;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    staging = *options.out_dir / "checkpoints.partial";
    std::filesystem::remove_all(*staging);
  }

  TrainResult result{{}, Agent(options.variant, hp, derive_seed(options.seed, kInitStream))};
  Agent& agent = result.agent;
  Rng rng(derive_seed(options.seed, kTrainStream));
  ReplayMemory memory(hp.replay_capacity);
  env::Environment environment(options.env);
  const auto batch = static_cast<std::size_t>(hp.batch_size);

  std::int64_t total_steps = 0;
  int episode = 0;
  try {
    for (; episode < hp.episodes; ++episode) {
      EpisodeRecord rec;
      rec.episode = episode;
      rec.noise_scale = hp.noise_scale_init * std::pow(hp.noise_decay, episode);
      env::Observation obs = environment.reset(episode_seed(options.seed, episode));
      nn::RecurrentState memory_state = agent.initial_state();
      OUState ou{hp.ou_mu, rec.noise_scale};
      rec.min_th = obs.th;

      for (std::int64_t step = 0;; ++step) {
        const env::Features s = obs.normalized();
        const double a = agent.act(s, memory_state, /*explore=*/true, ou, rng);
        const env::StepResult& res = environment.step(a, options.cage_enabled);
        const double r = options.penalty_enabled ? res.reward_total : res.reward_th;
        obs = res.observation;
        memory.push({s, res.verdict.executed_pedal, r, obs.normalized(), res.collision, episode,
                     step});
        rec.ret += r;
        rec.breaches += res.verdict.breached ? 1 : 0;
        rec.min_th = std::min(rec.min_th, obs.th);
        ++total_steps;

        if (total_steps > hp.warmup_steps && total_steps % hp.update_every == 0) {
          if (auto seq = memory.sample_sequence(batch, rng)) {
            agent.critic_update(*seq);
            agent.actor_update(*seq);
            agent.update_targets();
          }
        }
        if (res.done) {
          rec.steps = step + 1;
          rec.collisions = res.collision ? 1 : 0;
          break;
        }
      }
      result.log.push_back(rec);
      if (options.on_episode) options.on_episode(rec);
      if (staging && hp.checkpoint_every > 0 && (episode + 1) % hp.checkpoint_every == 0) {
        save_agent(agent, *staging / episode_dir_name(episode + 1));
      }
    }
  } catch (const NonFiniteError& e) {
    if (options.out_dir) {
      write_diagnostic(*options.out_dir / "diagnostic.json", e.what(), episode,
                       environment.state().episode_step, environment.state());
      std::filesystem::remove_all(*staging);
    }
    throw;
  } catch (...) {
    if (staging) std::filesystem::remove_all(*staging);
    throw;
  }

  if (options.out_dir) {
    save_agent(agent, *staging / "final");
    write_episode_log(result.log, *options.out_dir / "episode_log.csv");
    const auto published = *options.out_dir / "checkpoints";
    std::filesystem::remove_all(published);
    std::filesystem::rename(*staging, published);
  }
  return result;
}

}  // namespace cagerl::ddpg
