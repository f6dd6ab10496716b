#include "cagerl/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cagerl::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir_ = fs::temp_directory_path() / "cagerl_cli_test";
  void SetUp() override {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
};

TEST_F(CliTest, CageCheckPrintsDemand) {
  auto r = invoke({"cage-check", "--th", "1.2"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "0.4\n");
  r = invoke({"cage-check", "--ttc", "2"});
  EXPECT_EQ(r.out, "0.25\n");
  r = invoke({"cage-check", "--th", "0.75", "--ttc", "3", "--pedal", "0"});
  EXPECT_NE(r.out.find("executed_pedal -0.75"), std::string::npos);
  EXPECT_NE(r.out.find("breached true"), std::string::npos);
  EXPECT_EQ(invoke({"cage-check"}).code, kExitUsage);
  EXPECT_EQ(invoke({"cage-check", "--th", "-1"}).code, kExitUsage);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"train", "--set", "nodot"}).code, kExitUsage);
  const auto r = invoke({"train", "--set", "ddpg.tau=0", "--out", (dir_ / "bad").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(fs::exists(dir_ / "bad"));
}

TEST_F(CliTest, TrainEvalReportPlotPipeline) {
  const fs::path run = dir_ / "run";
  auto r = invoke({"train", "--out", run.string(), "--episodes", "2", "--episode-steps", "120",
                   "--variant", "shallow", "--seed", "3", "--set", "ddpg.warmup_steps=50"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"config.ini", "episode_log.csv", "reward.svg", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_EQ(resolve_actor_path(run), run / "checkpoints" / "final" / "actor.ckpt");
  const auto manifest = nlohmann::json::parse(slurp(run / "manifest.json"));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(manifest["seed"], 3);

  const fs::path ev = dir_ / "eval";
  r = invoke({"eval", "--model", run.string(), "--out", ev.string(), "--episodes", "2",
              "--episode-steps", "200", "--label", "tiny"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(ev / "metrics.csv"));
  EXPECT_EQ(slurp(ev / "label.txt").substr(0, 4), "tiny");

  const fs::path base = dir_ / "base";
  r = invoke({"eval", "--baseline", "rule_follower", "--out", base.string(), "--episodes", "2",
              "--episode-steps", "200"});
  ASSERT_EQ(r.code, kExitOk) << r.err;

  r = invoke({"report", "--logs", ev.string(), base.string(), "--out", (dir_ / "rep").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("tiny"), std::string::npos);
  EXPECT_NE(r.out.find("rule_follower"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "report.csv"));

  r = invoke({"plot", "--log", (run / "episode_log.csv").string(), "--out",
              (dir_ / "p.svg").string(), "--window", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(slurp(dir_ / "p.svg").find("<svg"), std::string::npos);

  const fs::path adv = dir_ / "adv";
  r = invoke({"adv-eval", "--model", run.string(), "--out", adv.string(), "--runs", "2",
              "--episodes", "2", "--episode-steps", "100", "--vel-range", "low"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"run_0.csv", "run_1.csv", "curves.csv", "min_th.svg", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(adv / f)) << f;
  }
  EXPECT_EQ(invoke({"adv-eval", "--model", run.string(), "--vel-range", "medium"}).code,
            kExitUsage);
}

TEST_F(CliTest, EvalNeedsExactlyOneController) {
  EXPECT_EQ(invoke({"eval", "--out", (dir_ / "e").string()}).code, kExitUsage);
  EXPECT_EQ(invoke({"eval", "--baseline", "teleport"}).code, kExitUsage);
  EXPECT_NE(invoke({"eval", "--model", (dir_ / "missing").string()}).code, kExitOk);
}

}  // namespace
}  // namespace cagerl::cli
