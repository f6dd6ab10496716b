#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cagerl/adversary.hpp"
#include "cagerl/cli.hpp"
#include "cagerl/config.hpp"
#include "cagerl/ddpg.hpp"
#include "cagerl/env.hpp"
#include "cagerl/errors.hpp"
#include "cagerl/harness.hpp"
#include "cagerl/nn.hpp"
#include "cagerl/safety_cage.hpp"

namespace py = pybind11;
using namespace cagerl;

namespace {

py::dict verdict_dict(const cage::CageVerdict& v) {
  py::dict d;
  d["th"] = v.th;
  d["ttc"] = v.ttc;
  d["b_th"] = v.b_th;
  d["b_ttc"] = v.b_ttc;
  d["b_agent"] = v.b_agent;
  d["b_final"] = v.b_final;
  d["executed_pedal"] = v.executed_pedal;
  d["breached"] = v.breached;
  d["risk_th"] = std::string(cage::to_string(v.risk_th));
  d["risk_ttc"] = std::string(cage::to_string(v.risk_ttc));
  return d;
}

py::dict metrics_dict(const harness::Aggregate& a) {
  py::dict d;
  d["min_x_rel"] = a.min_x_rel;
  d["mean_x_rel"] = a.mean_x_rel;
  d["max_v_rel"] = a.max_v_rel;
  d["mean_v_rel"] = a.mean_v_rel;
  d["min_th"] = a.min_th;
  d["mean_th"] = a.mean_th;
  d["collisions"] = a.collisions;
  return d;
}

std::unique_ptr<harness::Controller> make_controller(const std::string& model,
                                                     const std::string& baseline) {
  if (!model.empty() && !baseline.empty()) {
    throw UsageError("pass either model or baseline, not both");
  }
  if (baseline == "rule_follower") return std::make_unique<harness::RuleFollower>();
  if (baseline == "full_gas") return std::make_unique<harness::FullGas>();
  if (!baseline.empty()) throw UsageError("unknown baseline '" + baseline + "'");
  if (model.empty()) throw UsageError("pass a model path or a baseline name");
  return std::make_unique<harness::ActorController>(
      nn::load_network(cli::resolve_actor_path(model)), "model");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Safety-cage supervised DDPG vehicle following (C++ core).";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<CorruptCheckpoint>(m, "CorruptCheckpoint", PyExc_IOError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);

  // Safety cage.
  m.def("th_braking", &cage::th_braking, py::arg("th"));
  m.def("ttc_braking", &cage::ttc_braking, py::arg("ttc"));
  m.def("time_headway", &cage::time_headway, py::arg("x_rel"), py::arg("v"));
  m.def("time_to_collision", &cage::time_to_collision, py::arg("x_rel"), py::arg("v_rel"));
  m.def(
      "arbitrate",
      [](double x_rel, double v, double v_rel, double pedal) {
        return verdict_dict(cage::arbitrate(x_rel, v, v_rel, pedal));
      },
      py::arg("x_rel"), py::arg("v"), py::arg("v_rel"), py::arg("agent_pedal"));

  // Environment.
  py::class_<env::EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("dt", &env::EnvConfig::dt)
      .def_readwrite("episode_max_steps", &env::EnvConfig::episode_max_steps)
      .def_readwrite("emergency_rate_per_hour", &env::EnvConfig::emergency_rate_per_hour)
      .def_readwrite("target_th", &env::EnvConfig::target_th)
      .def_property(
          "lead_vel_range",
          [](const env::EnvConfig& c) {
            return std::make_pair(c.lead_vel_range.lo, c.lead_vel_range.hi);
          },
          [](env::EnvConfig& c, std::pair<double, double> r) {
            c.lead_vel_range = {r.first, r.second};
          })
      .def_property(
          "mu_range",
          [](const env::EnvConfig& c) { return std::make_pair(c.mu_range.lo, c.mu_range.hi); },
          [](env::EnvConfig& c, std::pair<double, double> r) { c.mu_range = {r.first, r.second}; })
      .def("validate", &env::EnvConfig::validate);

  py::class_<env::Observation>(m, "Observation")
      .def_readonly("v", &env::Observation::v)
      .def_readonly("v_dot", &env::Observation::v_dot)
      .def_readonly("v_rel", &env::Observation::v_rel)
      .def_readonly("th", &env::Observation::th)
      .def("normalized", &env::Observation::normalized)
      .def("__repr__", [](const env::Observation& o) {
        std::ostringstream s;
        s << "Observation(v=" << o.v << ", v_dot=" << o.v_dot << ", v_rel=" << o.v_rel
          << ", th=" << o.th << ")";
        return s.str();
      });

  py::class_<env::Environment>(m, "Environment")
      .def(py::init<env::EnvConfig>(), py::arg("config") = env::EnvConfig{})
      .def(
          "reset", [](env::Environment& e, std::uint64_t seed) { return e.reset(seed); },
          py::arg("seed"))
      .def(
          "step",
          [](env::Environment& e, double pedal, bool cage_enabled) {
            const env::StepResult& r = e.step(pedal, cage_enabled);
            py::dict d;
            d["observation"] = r.observation;
            d["verdict"] = verdict_dict(r.verdict);
            d["reward_th"] = r.reward_th;
            d["reward"] = r.reward_total;
            d["collision"] = r.collision;
            d["done"] = r.done;
            return d;
          },
          py::arg("pedal"), py::arg("cage_enabled") = true)
      .def_property_readonly("x_rel", [](const env::Environment& e) { return e.state().x_rel(); })
      .def_property_readonly("host_vel",
                             [](const env::Environment& e) { return e.state().host_vel; })
      .def_property_readonly("lead_vel",
                             [](const env::Environment& e) { return e.state().lead_vel; })
      .def_property_readonly("t", [](const env::Environment& e) { return e.state().t; });

  m.def("reward_headway", &env::reward_headway, py::arg("th"), py::arg("th_prev"),
        py::arg("target_th") = 2.0);
  m.def("reward_total", &env::reward_total, py::arg("r_th"), py::arg("breached"));

  // Configuration.
  m.def(
      "config_text",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        std::vector<config::Override> parsed;
        for (const auto& o : overrides) parsed.push_back(config::parse_override(o));
        return config::to_ini(config::parse_config(path, parsed));
      },
      py::arg("path") = std::string(), py::arg("overrides") = std::vector<std::string>{},
      "Fully resolved configuration text for a file plus section.key=value overrides.");

  // Training.
  m.def(
      "train",
      [](const std::string& config_path, const std::vector<std::string>& overrides,
         const std::string& out_dir, std::function<void(py::dict)> on_episode) {
        std::vector<config::Override> parsed;
        for (const auto& o : overrides) parsed.push_back(config::parse_override(o));
        const config::RunConfig cfg = config::parse_config(config_path, parsed);
        ddpg::TrainOptions opt;
        opt.env = cfg.env;
        opt.hp = cfg.ddpg;
        opt.cage_enabled = cfg.train.cage;
        opt.penalty_enabled = cfg.train.cage && cfg.train.penalty;
        opt.variant = cfg.train.variant;
        opt.seed = cfg.seed;
        if (!out_dir.empty()) opt.out_dir = out_dir;
        if (on_episode) {
          opt.on_episode = [&](const ddpg::EpisodeRecord& e) {
            py::dict d;
            d["episode"] = e.episode;
            d["return"] = e.ret;
            d["collisions"] = e.collisions;
            d["breaches"] = e.breaches;
            on_episode(d);
          };
        }
        const auto result = ddpg::train(opt);
        py::list log;
        for (const auto& e : result.log) {
          py::dict d;
          d["episode"] = e.episode;
          d["return"] = e.ret;
          d["steps"] = e.steps;
          d["collisions"] = e.collisions;
          d["breaches"] = e.breaches;
          d["min_th"] = e.min_th;
          d["noise_scale"] = e.noise_scale;
          log.append(d);
        }
        return log;
      },
      py::arg("config") = std::string(), py::arg("overrides") = std::vector<std::string>{},
      py::arg("out_dir") = std::string(), py::arg("on_episode") = nullptr,
      "Trains a driving agent and returns the per-episode log.");

  m.def(
      "policy_action",
      [](const std::string& model, const std::vector<std::array<double, 4>>& observations) {
        const nn::Network actor = nn::load_network(cli::resolve_actor_path(model));
        nn::RecurrentState state = actor.initial_state();
        std::vector<double> out;
        for (const auto& o : observations) out.push_back(ddpg::policy_action(actor, o, &state));
        return out;
      },
      py::arg("model"), py::arg("observations"),
      "Deterministic actions for a sequence of normalized observations.");

  // Evaluation.
  m.def(
      "evaluate",
      [](const std::string& model, const std::string& baseline, int episodes,
         std::int64_t episode_steps, std::uint64_t seed, bool cage_enabled) {
        auto controller = make_controller(model, baseline);
        harness::CampaignOptions opt;
        opt.episodes = episodes;
        opt.episode_steps = episode_steps;
        opt.seed = seed;
        opt.cage_enabled = cage_enabled;
        const auto summary = harness::run_naturalistic(*controller, env::EnvConfig{}, opt);
        return metrics_dict(summary.total);
      },
      py::arg("model") = std::string(), py::arg("baseline") = std::string(),
      py::arg("episodes") = 120, py::arg("episode_steps") = 7500, py::arg("seed") = 0,
      py::arg("cage_enabled") = false, "Naturalistic campaign; returns the aggregate metrics.");

  m.def("adversary_reward", &adversary::adversary_reward, py::arg("th"));

  // Command-line tool.
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the cagerl tool in-process; returns (exit_code, stdout, stderr).");
}
