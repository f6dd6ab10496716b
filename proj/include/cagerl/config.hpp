#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cagerl/ddpg.hpp"
#include "cagerl/env.hpp"
#include "cagerl/harness.hpp"

// Run configuration: INI-style file with [env], [ddpg], [train],
// [adversary], [campaign] and [run] sections. Every key defaults to the
// published setting where one exists.
namespace cagerl::config {

struct TrainSection {
  ddpg::Variant variant = ddpg::Variant::kDeep;
  bool cage = true;
  bool penalty = true;
  bool operator==(const TrainSection&) const = default;
};

struct RunConfig {
  env::EnvConfig env;
  ddpg::Hyperparams ddpg;
  TrainSection train;
  harness::AdversarialOptions adversarial;
  harness::CampaignOptions campaign;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: derived from the output root

  void validate() const;  // throws ConfigError naming the field
};

// Overrides use "section.key=value".
struct Override {
  std::string key;
  std::string value;
};
Override parse_override(const std::string& text);  // throws UsageError

RunConfig default_config();

// Parses INI text; unknown sections or keys are rejected. `source` names the
// origin in error messages.
RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides = {},
                            const std::string& source = "<config>");
// A missing path is an error; pass an empty path for defaults only.
RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<Override>& overrides = {});

// Canonical, fully resolved INI rendering; parsing it reproduces the config.
std::string to_ini(const RunConfig& config);

// FNV-1a 64 of `text`, 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);
std::string config_hash(const RunConfig& config);

// Canonical text of the environment section alone.
std::string env_ini(const env::EnvConfig& env);

// Default output root: $CAGERL_OUT or ./runs.
std::filesystem::path default_output_root();
inline constexpr const char* kOutputRootEnvVar = "CAGERL_OUT";

}  // namespace cagerl::config
