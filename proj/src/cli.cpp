#include "cagerl/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "cagerl/adversary.hpp"
#include "cagerl/config.hpp"
#include "cagerl/ddpg.hpp"
#include "cagerl/errors.hpp"
#include "cagerl/harness.hpp"
#include "cagerl/nn.hpp"
#include "cagerl/plot.hpp"
#include "cagerl/safety_cage.hpp"

namespace cagerl::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// Options shared by every subcommand that reads a run configuration.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "INI configuration file");
  cmd->add_option("--set", c.sets, "Override a key, e.g. --set ddpg.tau=0.01")
      ->type_name("SECTION.KEY=VALUE");
  cmd->add_option("--out", c.out, "Output directory of this run");
}

config::RunConfig load(const Common& c, std::vector<config::Override> flags) {
  std::vector<config::Override> overrides;
  for (const auto& s : c.sets) overrides.push_back(config::parse_override(s));
  overrides.insert(overrides.end(), flags.begin(), flags.end());
  return config::parse_config(c.config_path, overrides);
}

template <class T>
void flag_override(std::vector<config::Override>& list, const std::optional<T>& value,
                   const std::string& key) {
  if (!value) return;
  std::ostringstream s;
  if constexpr (std::is_same_v<T, bool>) {
    s << (*value ? "true" : "false");
  } else {
    s << *value;
  }
  list.push_back({key, s.str()});
}

fs::path output_dir(const Common& c, const config::RunConfig& cfg, const std::string& command,
                    const std::string& hash) {
  if (!c.out.empty()) return c.out;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  return config::default_output_root() / (command + "-" + hash);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Manifest of a run directory: enough to rerun it bit-exactly.
void write_manifest(const fs::path& dir, const std::string& command,
                    const config::RunConfig& cfg, std::uint64_t seed,
                    const std::vector<std::string>& inputs, std::vector<std::string> artifacts) {
  std::sort(artifacts.begin(), artifacts.end());
  nlohmann::json j;
  j["tool"] = "cagerl";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = "config.ini";
  j["config_hash"] = config::config_hash(cfg);
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["artifacts"] = artifacts;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<std::string> list_artifacts(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") out.push_back(rel);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::int64_t> episode_steps;
  std::optional<std::string> variant;
  bool no_cage = false;
  bool no_penalty = false;
  int progress = 10;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<config::Override> flags;
  flag_override(flags, a.seed, "run.seed");
  flag_override(flags, a.episodes, "ddpg.episodes");
  flag_override(flags, a.episode_steps, "env.episode_max_steps");
  flag_override(flags, a.variant, "train.variant");
  if (a.no_cage) flags.push_back({"train.cage", "false"});
  if (a.no_penalty) flags.push_back({"train.penalty", "false"});
  const config::RunConfig cfg = load(a.common, flags);
  const std::string hash = config::config_hash(cfg);
  const fs::path dir = output_dir(a.common, cfg, "train", hash);

  fs::create_directories(dir);
  write_text(dir / "config.ini", config::to_ini(cfg));

  ddpg::TrainOptions opt;
  opt.env = cfg.env;
  opt.hp = cfg.ddpg;
  opt.cage_enabled = cfg.train.cage;
  opt.penalty_enabled = cfg.train.cage && cfg.train.penalty;
  opt.variant = cfg.train.variant;
  opt.seed = cfg.seed;
  opt.out_dir = dir;
  opt.on_episode = [&](const ddpg::EpisodeRecord& r) {
    if (a.progress > 0 && (r.episode + 1) % a.progress == 0) {
      err << "episode " << r.episode + 1 << "/" << cfg.ddpg.episodes << " return " << fmt(r.ret)
          << " collisions " << r.collisions << " breaches " << r.breaches << " min_th "
          << fmt(r.min_th) << "\n";
    }
  };
  const auto result = ddpg::train(opt);
  plot::write_svg(plot::reward_figure(result.log, cfg.adversarial.smoothing_window),
                  dir / "reward.svg");
  write_manifest(dir, "train", cfg, cfg.seed, {}, list_artifacts(dir));

  int collisions = 0, breaches = 0;
  for (const auto& r : result.log) {
    collisions += r.collisions;
    breaches += r.breaches;
  }
  out << "run directory: " << dir.string() << "\n";
  out << "episodes " << result.log.size() << ", collisions " << collisions << ", breaches "
      << breaches << ", final return " << fmt(result.log.back().ret) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string model;
  std::string baseline;
  std::string label;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::int64_t> episode_steps;
  bool cage = false;
};

std::unique_ptr<harness::Controller> make_controller(const EvalArgs& a) {
  if (!a.model.empty() && !a.baseline.empty()) {
    throw UsageError("--model and --baseline are mutually exclusive");
  }
  if (a.baseline == "rule_follower") return std::make_unique<harness::RuleFollower>();
  if (a.baseline == "full_gas") return std::make_unique<harness::FullGas>();
  if (!a.baseline.empty()) throw UsageError("unknown baseline '" + a.baseline + "'");
  if (a.model.empty()) throw UsageError("eval needs --model or --baseline");
  const fs::path actor = resolve_actor_path(a.model);
  const std::string label = a.label.empty() ? fs::path(a.model).filename().string() : a.label;
  return std::make_unique<harness::ActorController>(nn::load_network(actor), label);
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  std::vector<config::Override> flags;
  flag_override(flags, a.seed, "campaign.seed");
  flag_override(flags, a.episodes, "campaign.episodes");
  flag_override(flags, a.episode_steps, "campaign.episode_steps");
  if (a.cage) flags.push_back({"campaign.cage_enabled", "true"});
  const config::RunConfig cfg = load(a.common, flags);
  auto controller = make_controller(a);
  if (!a.label.empty() && !a.baseline.empty()) {
    throw UsageError("--label applies to --model only");
  }

  const std::string hash = config::fnv1a_hex(config::config_hash(cfg) + "|" + a.model + "|" +
                                             a.baseline + "|" + controller->label());
  const fs::path dir = output_dir(a.common, cfg, "eval", hash);
  fs::create_directories(dir);
  write_text(dir / "config.ini", config::to_ini(cfg));

  const auto summary = harness::run_naturalistic(*controller, cfg.env, cfg.campaign);
  harness::write_metrics(summary.episodes, dir / "metrics.csv");
  write_text(dir / "summary.txt", harness::summary_table({summary}));
  write_text(dir / "summary.csv", harness::summary_csv({summary}));
  write_text(dir / "label.txt", summary.label + "\n");
  std::vector<std::string> inputs;
  if (!a.model.empty()) inputs.push_back(fs::absolute(resolve_actor_path(a.model)).string());
  write_manifest(dir, "eval", cfg, cfg.campaign.seed, inputs, list_artifacts(dir));

  out << harness::summary_table({summary});
  out << "scenario suite " << summary.config_hash << ", run directory: " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AdvArgs {
  Common common;
  std::string model;
  std::string vel_range = "high";
  std::optional<int> runs;
  std::optional<int> episodes;
  std::optional<std::int64_t> episode_steps;
  std::optional<std::uint64_t> seed;
  int progress = 50;
};

int cmd_adversarial(const std::string& name, const AdvArgs& a, std::ostream& out,
                    std::ostream& err) {
  std::vector<config::Override> flags;
  flag_override(flags, a.runs, "adversary.runs");
  flag_override(flags, a.episodes, "adversary.episodes");
  flag_override(flags, a.episode_steps, "adversary.episode_steps");
  flag_override(flags, a.seed, "adversary.seed");
  if (a.vel_range == "high") {
    flags.push_back({"adversary.vel_range", "17, 40"});
  } else if (a.vel_range == "low") {
    flags.push_back({"adversary.vel_range", "12, 30"});
  } else {
    throw UsageError("--vel-range must be high or low");
  }
  const config::RunConfig cfg = load(a.common, flags);
  const fs::path actor = resolve_actor_path(a.model);
  const nn::Network host = nn::load_network(actor);

  const std::string hash =
      config::fnv1a_hex(config::config_hash(cfg) + "|" + fs::absolute(actor).string());
  const fs::path dir = output_dir(a.common, cfg, name, hash);
  fs::create_directories(dir);
  write_text(dir / "config.ini", config::to_ini(cfg));

  std::vector<adversary::AdversaryPolicy> policies;
  const auto curves = harness::run_adversarial(
      host, cfg.env, cfg.adversarial,
      [&](int run, const adversary::AdversaryEpisode& e) {
        if (a.progress > 0 && (e.episode + 1) % a.progress == 0) {
          err << "run " << run << " episode " << e.episode + 1 << " min_th " << fmt(e.min_th)
              << " collisions " << e.collisions << "\n";
        }
      },
      &policies);
  for (std::size_t i = 0; i < curves.runs.size(); ++i) {
    adversary::write_adversary_log(curves.runs[i], dir / ("run_" + std::to_string(i) + ".csv"));
    nn::save_checkpoint(policies[i].network(), dir / ("adversary_" + std::to_string(i) + ".ckpt"));
  }
  harness::write_curves(curves, dir / "curves.csv");
  plot::write_svg(plot::min_th_figure(curves), dir / "min_th.svg");
  write_manifest(dir, name, cfg, cfg.adversarial.adversary.seed,
                 {fs::absolute(actor).string()}, list_artifacts(dir));

  double final_mean = 0.0;
  const std::size_t tail = std::min<std::size_t>(50, curves.mean_min_th.size());
  for (std::size_t i = curves.mean_min_th.size() - tail; i < curves.mean_min_th.size(); ++i) {
    final_mean += curves.mean_min_th[i];
  }
  final_mean /= static_cast<double>(tail);
  double overall_min = curves.mean_min_th.empty() ? 0.0 : curves.runs[0][0].min_th;
  for (const auto& run : curves.runs) {
    for (const auto& e : run) overall_min = std::min(overall_min, e.min_th);
  }
  out << "runs " << curves.runs.size() << ", collisions " << curves.total_collisions
      << ", lowest min_th " << fmt(overall_min) << ", mean min_th over last " << tail
      << " episodes " << fmt(final_mean) << "\n";
  out << "run directory: " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CageArgs {
  std::optional<double> th;
  std::optional<double> ttc;
  std::optional<double> pedal;
};

int cmd_cage_check(const CageArgs& a, std::ostream& out) {
  if (!a.th && !a.ttc) throw UsageError("cage-check needs --th and/or --ttc");
  if (a.th && *a.th < 0.0) throw UsageError("--th must be >= 0");
  const double b_th = a.th ? cage::th_braking(*a.th) : 0.0;
  const double b_ttc = a.ttc ? cage::ttc_braking(*a.ttc) : 0.0;
  if (!a.pedal && (!a.th || !a.ttc)) {
    out << fmt(a.th ? b_th : b_ttc) << "\n";
    return kExitOk;
  }
  out << "b_th " << fmt(b_th) << "\n";
  out << "b_ttc " << fmt(b_ttc) << "\n";
  if (a.th) out << "risk_th " << cage::to_string(cage::th_risk(*a.th)) << "\n";
  if (a.ttc) out << "risk_ttc " << cage::to_string(cage::ttc_risk(*a.ttc)) << "\n";
  if (a.pedal) {
    if (!(std::abs(*a.pedal) <= 1.0)) throw UsageError("--pedal must lie in [-1, 1]");
    const double b_agent = std::max(0.0, -*a.pedal);
    const double demand = std::max(b_th, b_ttc);
    const bool breached = demand > b_agent;
    out << "b_final " << fmt(std::max(demand, b_agent)) << "\n";
    out << "executed_pedal " << fmt(breached ? -demand : *a.pedal) << "\n";
    out << "breached " << (breached ? "true" : "false") << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> logs;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& root : a.logs) {
    if (fs::is_regular_file(root)) {
      files.push_back(root);
      continue;
    }
    if (!fs::is_directory(root)) throw std::runtime_error("no such log path: " + root);
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") {
        files.push_back(entry.path());
      }
    }
  }
  if (files.empty()) throw std::runtime_error("no metrics.csv found under the given paths");
  std::sort(files.begin(), files.end());

  std::vector<harness::CampaignSummary> columns;
  for (const auto& f : files) {
    harness::CampaignSummary s;
    const fs::path label_file = f.parent_path() / "label.txt";
    if (fs::exists(label_file)) {
      std::ifstream in(label_file);
      std::getline(in, s.label);
    }
    if (s.label.empty()) s.label = f.parent_path().filename().string();
    s.episodes = harness::read_metrics(f);
    s.total = harness::aggregate(s.episodes);
    columns.push_back(std::move(s));
  }
  const std::string table = harness::summary_table(columns);
  out << table;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.txt", table);
    write_text(fs::path(a.out) / "report.csv", harness::summary_csv(columns));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  std::string log;
  std::string out;
  int window = 50;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  std::ifstream in(a.log);
  if (!in) throw std::runtime_error("cannot read " + a.log);
  std::string header;
  std::getline(in, header);
  in.close();

  plot::Figure fig;
  if (header == ddpg::kEpisodeLogHeader) {
    fig = plot::reward_figure(ddpg::read_episode_log(a.log), a.window);
  } else if (header == adversary::kAdversaryLogHeader) {
    fig = plot::adversary_log_figure(adversary::read_adversary_log(a.log), a.window);
  } else if (header == harness::kCurvesHeader) {
    harness::AdversarialCurves curves;
    std::ifstream rows(a.log);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
      if (line.empty()) continue;
      int ep = 0;
      double m = 0, s = 0, sm = 0, ss = 0;
      if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &ep, &m, &s, &sm, &ss) != 5) {
        throw std::runtime_error("malformed curves row: " + line);
      }
      curves.mean_min_th.push_back(m);
      curves.std_min_th.push_back(s);
      curves.smoothed_mean.push_back(sm);
      curves.smoothed_std.push_back(ss);
    }
    fig = plot::min_th_figure(curves);
  } else {
    throw std::runtime_error("unrecognised log format: " + a.log);
  }
  const fs::path target =
      a.out.empty() ? fs::path(fs::path(a.log).stem().string() + ".svg") : fs::path(a.out);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  plot::write_svg(fig, target);
  out << "wrote " << target.string() << "\n";
  return kExitOk;
}

}  // namespace

fs::path resolve_actor_path(const fs::path& model) {
  if (fs::is_regular_file(model)) return model;
  for (const fs::path& candidate :
       {model / "checkpoints" / "final" / "actor.ckpt", model / "final" / "actor.ckpt",
        model / "actor.ckpt"}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  throw std::runtime_error("no actor checkpoint found at " + model.string());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safety-cage supervised DDPG vehicle following: training and evaluation",
               "cagerl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a DDPG driving agent");
  add_common(c_train, train.common);
  c_train->add_option("--seed", train.seed, "Run seed");
  c_train->add_option("--episodes", train.episodes, "Training episodes");
  c_train->add_option("--episode-steps", train.episode_steps, "Steps per training episode");
  c_train->add_option("--variant", train.variant, "deep or shallow")
      ->check(CLI::IsMember({"deep", "shallow"}));
  c_train->add_flag("--no-cage", train.no_cage, "Train without the safety cage");
  c_train->add_flag("--no-penalty", train.no_penalty, "Keep the cage but drop its penalty");
  c_train->add_option("--progress", train.progress, "Print every N episodes (0: quiet)");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Naturalistic evaluation campaign");
  add_common(c_eval, eval.common);
  c_eval->add_option("--model", eval.model, "Run directory or actor checkpoint");
  c_eval->add_option("--baseline", eval.baseline, "rule_follower or full_gas");
  c_eval->add_option("--label", eval.label, "Column label in summaries");
  c_eval->add_option("--seed", eval.seed, "Scenario suite seed");
  c_eval->add_option("--episodes", eval.episodes, "Scenarios in the suite");
  c_eval->add_option("--episode-steps", eval.episode_steps, "Steps per scenario");
  c_eval->add_flag("--cage", eval.cage, "Keep the safety cage active during evaluation");

  AdvArgs adv_eval;
  auto* c_adv_eval = app.add_subcommand("adv-eval", "Adversarial evaluation of a driving agent");
  AdvArgs adv;
  auto* c_adv = app.add_subcommand("adversary", "Train adversaries against a frozen host");
  for (auto [cmd, args] : {std::pair{c_adv_eval, &adv_eval}, std::pair{c_adv, &adv}}) {
    add_common(cmd, args->common);
    cmd->add_option("--model,--host", args->model, "Host run directory or actor checkpoint")
        ->required();
    cmd->add_option("--vel-range", args->vel_range, "high [17,40] or low [12,30] m/s")
        ->check(CLI::IsMember({"high", "low"}));
    cmd->add_option("--runs", args->runs, "Independent adversaries");
    cmd->add_option("--episodes", args->episodes, "Episodes per adversary");
    cmd->add_option("--episode-steps", args->episode_steps, "Steps per adversary episode");
    cmd->add_option("--seed", args->seed, "Adversary seed");
    cmd->add_option("--progress", args->progress, "Print every N episodes (0: quiet)");
  }

  CageArgs cage_args;
  auto* c_cage = app.add_subcommand("cage-check", "Print safety cage braking demands");
  c_cage->add_option("--th", cage_args.th, "Time headway [s]");
  c_cage->add_option("--ttc", cage_args.ttc, "Time to collision [s]");
  c_cage->add_option("--pedal", cage_args.pedal, "Agent pedal in [-1, 1]");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Summary table from evaluation logs");
  c_report->add_option("--logs", report.logs, "Evaluation directories or metrics files")
      ->required();
  c_report->add_option("--out", report.out, "Directory for report.txt and report.csv");

  PlotArgs plot_args;
  auto* c_plot = app.add_subcommand("plot", "Render a log as an SVG chart");
  c_plot->add_option("--log", plot_args.log, "Episode, adversary or curves log")->required();
  c_plot->add_option("--out", plot_args.out, "SVG path (default: <log stem>.svg)");
  c_plot->add_option("--window", plot_args.window, "Moving-average window")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (c_train->parsed()) return cmd_train(train, out, err);
    if (c_eval->parsed()) return cmd_eval(eval, out, err);
    if (c_adv_eval->parsed()) return cmd_adversarial("adv-eval", adv_eval, out, err);
    if (c_adv->parsed()) return cmd_adversarial("adversary", adv, out, err);
    if (c_cage->parsed()) return cmd_cage_check(cage_args, out);
    if (c_report->parsed()) return cmd_report(report, out);
    if (c_plot->parsed()) return cmd_plot(plot_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("cagerl");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cagerl::cli
