#include "cagerl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "cagerl/errors.hpp"

namespace cagerl::config {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
std::string format(int v) { return std::to_string(v); }
std::string format(std::int64_t v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const env::Range& r) { return format(r.lo) + ", " + format(r.hi); }
std::string format(ddpg::Variant v) { return std::string(ddpg::to_string(v)); }
std::string format(nn::OptimizerKind k) { return k == nn::OptimizerKind::kAdam ? "adam" : "sgd"; }
std::string format(ddpg::TargetMode m) {
  return m == ddpg::TargetMode::kTargetNetworks ? "target_networks" : "online_critic";
}
std::string format(const std::string& s) { return s; }

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}
bool parse(const std::string& s, int& out) { return parse_int(s, out); }
bool parse(const std::string& s, std::int64_t& out) { return parse_int(s, out); }
bool parse(const std::string& s, std::uint64_t& out) { return parse_int(s, out); }
bool parse(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    out = false;
    return true;
  }
  return false;
}
bool parse(const std::string& s, env::Range& out) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) return false;
  return parse(trim(s.substr(0, comma)), out.lo) && parse(trim(s.substr(comma + 1)), out.hi);
}
bool parse(const std::string& s, ddpg::Variant& out) {
  if (s != "deep" && s != "shallow") return false;
  out = ddpg::parse_variant(s);
  return true;
}
bool parse(const std::string& s, nn::OptimizerKind& out) {
  if (s == "adam") out = nn::OptimizerKind::kAdam;
  else if (s == "sgd") out = nn::OptimizerKind::kSgd;
  else return false;
  return true;
}
bool parse(const std::string& s, ddpg::TargetMode& out) {
  if (s == "target_networks") out = ddpg::TargetMode::kTargetNetworks;
  else if (s == "online_critic") out = ddpg::TargetMode::kOnlineCritic;
  else return false;
  return true;
}
bool parse(const std::string& s, std::string& out) {
  out = s;
  return true;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<bool(RunConfig&, const std::string&)> set;
};

template <class Acc>
Field make(const char* section, const char* key, Acc acc) {
  return {section, key, [acc](const RunConfig& c) { return format(acc(c)); },
          [acc](RunConfig& c, const std::string& v) { return parse(v, acc(c)); }};
}

#define CAGERL_FIELD(section, key, expr) \
  make(section, key, [](auto& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CAGERL_FIELD("env", "dt", c.env.dt),
      CAGERL_FIELD("env", "episode_max_steps", c.env.episode_max_steps),
      CAGERL_FIELD("env", "lead_vel_range", c.env.lead_vel_range),
      CAGERL_FIELD("env", "lead_acc_range", c.env.lead_acc_range),
      CAGERL_FIELD("env", "emergency_acc_range", c.env.emergency_acc_range),
      CAGERL_FIELD("env", "emergency_rate_per_hour", c.env.emergency_rate_per_hour),
      CAGERL_FIELD("env", "emergency_floor_vel", c.env.emergency_floor_vel),
      CAGERL_FIELD("env", "segment_duration_range", c.env.segment_duration_range),
      CAGERL_FIELD("env", "mu_range", c.env.mu_range),
      CAGERL_FIELD("env", "target_th", c.env.target_th),
      CAGERL_FIELD("env", "init_th_range", c.env.init_th_range),
      CAGERL_FIELD("env", "host_vel_jitter", c.env.host_vel_jitter),

      CAGERL_FIELD("ddpg", "batch_size", c.ddpg.batch_size),
      CAGERL_FIELD("ddpg", "hidden_width", c.ddpg.hidden_width),
      CAGERL_FIELD("ddpg", "lstm_units", c.ddpg.lstm_units),
      CAGERL_FIELD("ddpg", "gamma", c.ddpg.gamma),
      CAGERL_FIELD("ddpg", "lr_actor", c.ddpg.lr_actor),
      CAGERL_FIELD("ddpg", "lr_critic", c.ddpg.lr_critic),
      CAGERL_FIELD("ddpg", "replay_capacity", c.ddpg.replay_capacity),
      CAGERL_FIELD("ddpg", "tau", c.ddpg.tau),
      CAGERL_FIELD("ddpg", "noise_scale_init", c.ddpg.noise_scale_init),
      CAGERL_FIELD("ddpg", "noise_decay", c.ddpg.noise_decay),
      CAGERL_FIELD("ddpg", "grad_clip", c.ddpg.grad_clip),
      CAGERL_FIELD("ddpg", "ou_mu", c.ddpg.ou_mu),
      CAGERL_FIELD("ddpg", "ou_theta", c.ddpg.ou_theta),
      CAGERL_FIELD("ddpg", "ou_sigma", c.ddpg.ou_sigma),
      CAGERL_FIELD("ddpg", "episodes", c.ddpg.episodes),
      CAGERL_FIELD("ddpg", "warmup_steps", c.ddpg.warmup_steps),
      CAGERL_FIELD("ddpg", "update_every", c.ddpg.update_every),
      CAGERL_FIELD("ddpg", "checkpoint_every", c.ddpg.checkpoint_every),
      CAGERL_FIELD("ddpg", "optimizer", c.ddpg.optimizer),
      CAGERL_FIELD("ddpg", "target_mode", c.ddpg.target_mode),

      CAGERL_FIELD("train", "variant", c.train.variant),
      CAGERL_FIELD("train", "cage", c.train.cage),
      CAGERL_FIELD("train", "penalty", c.train.penalty),

      CAGERL_FIELD("adversary", "vel_range", c.adversarial.adversary.vel_range),
      CAGERL_FIELD("adversary", "acc_bounds", c.adversarial.adversary.acc_bounds),
      CAGERL_FIELD("adversary", "episodes", c.adversarial.adversary.episodes),
      CAGERL_FIELD("adversary", "episode_steps", c.adversarial.adversary.episode_steps),
      CAGERL_FIELD("adversary", "n_step", c.adversarial.adversary.n_step),
      CAGERL_FIELD("adversary", "hidden_width", c.adversarial.adversary.hidden_width),
      CAGERL_FIELD("adversary", "entropy_coef", c.adversarial.adversary.entropy_coef),
      CAGERL_FIELD("adversary", "value_coef", c.adversarial.adversary.value_coef),
      CAGERL_FIELD("adversary", "lr", c.adversarial.adversary.lr),
      CAGERL_FIELD("adversary", "gamma", c.adversarial.adversary.gamma),
      CAGERL_FIELD("adversary", "grad_clip", c.adversarial.adversary.grad_clip),
      CAGERL_FIELD("adversary", "log_std_min", c.adversarial.adversary.log_std_min),
      CAGERL_FIELD("adversary", "log_std_max", c.adversarial.adversary.log_std_max),
      CAGERL_FIELD("adversary", "seed", c.adversarial.adversary.seed),
      CAGERL_FIELD("adversary", "runs", c.adversarial.runs),
      CAGERL_FIELD("adversary", "smoothing_window", c.adversarial.smoothing_window),

      CAGERL_FIELD("campaign", "episodes", c.campaign.episodes),
      CAGERL_FIELD("campaign", "episode_steps", c.campaign.episode_steps),
      CAGERL_FIELD("campaign", "cage_enabled", c.campaign.cage_enabled),
      CAGERL_FIELD("campaign", "seed", c.campaign.seed),

      CAGERL_FIELD("run", "seed", c.seed),
      CAGERL_FIELD("run", "out_dir", c.out_dir),
  };
  return table;
}

#undef CAGERL_FIELD

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

void assign(RunConfig& config, const std::string& section, const std::string& key,
            const std::string& value, const std::string& source) {
  const Field* f = find_field(section, key);
  if (f == nullptr) {
    throw ConfigError(source + ": unknown key '" + section + "." + key + "'");
  }
  if (!f->set(config, trim(value))) {
    throw ConfigError(source + ": invalid value for " + section + "." + key + ": '" + value +
                      "'");
  }
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid config: " + field + " " + why);
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  ddpg.validate();
  adversarial.adversary.validate();
  require(adversarial.runs > 0, "adversary.runs", "must be > 0");
  require(adversarial.smoothing_window > 0, "adversary.smoothing_window", "must be > 0");
  require(campaign.episodes > 0, "campaign.episodes", "must be > 0");
  require(campaign.episode_steps > 0, "campaign.episode_steps", "must be > 0");
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || text.substr(0, eq).find('.') == std::string::npos) {
    throw UsageError("override must look like section.key=value: '" + text + "'");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides,
                            const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source + ": " + e.message(), static_cast<int>(e.line()));
  }

  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(source + ": key '" + section + "' outside any section");
    }
    const bool known = std::any_of(fields().begin(), fields().end(),
                                   [&](const Field& f) { return f.section == section; });
    if (!known) throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      assign(config, section, key, value.data(), source);
    }
  }
  for (const auto& o : overrides) {
    const auto dot = o.key.find('.');
    if (dot == std::string::npos) throw UsageError("override key needs a section: " + o.key);
    assign(config, o.key.substr(0, dot), o.key.substr(dot + 1), o.value, "override");
  }
  config.validate();
  return config;
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  if (path.empty()) return parse_config_text("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides, path.string());
}

std::string to_ini(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string env_ini(const env::EnvConfig& env) {
  RunConfig c;
  c.env = env;
  std::string out;
  for (const auto& f : fields()) {
    if (f.section == "env") out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(to_ini(config)); }

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv(kOutputRootEnvVar); root != nullptr && *root != '\0') {
    return root;
  }
  return "runs";
}

}  // namespace cagerl::config
