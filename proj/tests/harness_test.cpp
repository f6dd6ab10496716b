#include "cagerl/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "cagerl/ddpg.hpp"
#include "cagerl/errors.hpp"

namespace cagerl::harness {
namespace {

EpisodeMetrics metrics(int ep, bool col, double min_x, double mean_x, double max_v,
                       double mean_v, double min_th, double mean_th) {
  return {ep, 100, col, min_x, mean_x, max_v, mean_v, min_th, mean_th};
}

TEST(AggregateTest, MinOfMinsMeanOfMeansMaxOfMaxes) {
  const std::vector<EpisodeMetrics> eps{metrics(0, false, 10, 40, 3, 1, 1.2, 2.0),
                                        metrics(1, true, 0, 20, 9, 2, 0, 1.6),
                                        metrics(2, false, 15, 60, 1, 3, 1.5, 2.4)};
  const Aggregate a = aggregate(eps);
  EXPECT_EQ(a.min_x_rel, 0.0);
  EXPECT_DOUBLE_EQ(a.mean_x_rel, 40.0);
  EXPECT_EQ(a.max_v_rel, 9.0);
  EXPECT_DOUBLE_EQ(a.mean_v_rel, 2.0);
  EXPECT_EQ(a.min_th, 0.0);
  EXPECT_DOUBLE_EQ(a.mean_th, 2.0);
  EXPECT_EQ(a.collisions, 1);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(MovingAverageTest, TrailingWindow) {
  const auto m = moving_average({1, 2, 3, 4, 5}, 3);
  ASSERT_EQ(m.size(), 5u);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 1.5);
  EXPECT_DOUBLE_EQ(m[2], 2.0);
  EXPECT_DOUBLE_EQ(m[3], 3.0);
  EXPECT_DOUBLE_EQ(m[4], 4.0);
  EXPECT_THROW(moving_average({1.0}, 0), std::invalid_argument);
}

TEST(MovingAverageTest, MatchesDirectSumsOnRandomData) {
  Rng rng(1);
  std::vector<double> v(500);
  for (auto& x : v) x = rng.uniform(-10, 10);
  const auto m = moving_average(v, 50);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i + 1 >= 50 ? i + 1 - 50 : 0;
    double s = 0.0;
    for (std::size_t k = lo; k <= i; ++k) s += v[k];
    ASSERT_NEAR(m[i], s / double(i + 1 - lo), 1e-10);
  }
}

TEST(ThresholdTest, RequiresFullWindow) {
  EXPECT_EQ(episodes_to_threshold({10, 10, 10, 10}, 10, 3), 2);
  EXPECT_EQ(episodes_to_threshold({0, 0, 9, 9, 12}, 10, 2), 4);
  EXPECT_FALSE(episodes_to_threshold({1, 2, 3}, 10, 2).has_value());
  EXPECT_FALSE(episodes_to_threshold({10}, 5, 2).has_value());
}

TEST(CombineRunsTest, MeanAndPopulationStd) {
  using adversary::AdversaryEpisode;
  std::vector<std::vector<AdversaryEpisode>> runs{
      {{0, 1.0, 0, 0}, {1, 2.0, 0, 0}},
      {{0, 3.0, 0, 0}, {1, 2.0, 1, 0}},
  };
  const auto c = combine_runs(runs, 2);
  ASSERT_EQ(c.mean_min_th.size(), 2u);
  EXPECT_DOUBLE_EQ(c.mean_min_th[0], 2.0);
  EXPECT_DOUBLE_EQ(c.std_min_th[0], 1.0);
  EXPECT_DOUBLE_EQ(c.std_min_th[1], 0.0);
  EXPECT_DOUBLE_EQ(c.smoothed_mean[1], 2.0);
  EXPECT_DOUBLE_EQ(c.smoothed_std[1], 0.5);
  EXPECT_EQ(c.total_collisions, 1);
  runs[1].pop_back();
  EXPECT_THROW(combine_runs(runs, 2), std::invalid_argument);
}

TEST(BaselineTest, FullGasCollides) {
  env::EnvConfig cfg;
  FullGas gas;
  const auto m = run_episode(gas, cfg, scenario_seed(0, 0), false);
  EXPECT_TRUE(m.collision);
  EXPECT_EQ(m.min_th, 0.0);
  EXPECT_EQ(m.min_x_rel, 0.0);
  EXPECT_LT(m.steps, cfg.episode_max_steps);
}

TEST(BaselineTest, RuleFollowerKeepsDistance) {
  env::EnvConfig cfg;
  RuleFollower rf;
  CampaignOptions opt;
  opt.episodes = 5;
  opt.episode_steps = 3000;
  const auto summary = run_naturalistic(rf, cfg, opt);
  EXPECT_EQ(summary.total.collisions, 0);
  EXPECT_GT(summary.total.min_th, 1.0);
  EXPECT_NEAR(summary.total.mean_th, 2.0, 0.25);
  ASSERT_EQ(summary.episodes.size(), 5u);
  for (const auto& e : summary.episodes) {
    EXPECT_EQ(e.steps, 3000);
    EXPECT_LE(e.min_th, e.mean_th);
    EXPECT_LE(e.mean_v_rel, e.max_v_rel);
  }
}

TEST(CampaignTest, SuiteIsReproducibleAndHashed) {
  env::EnvConfig cfg;
  CampaignOptions opt;
  opt.episodes = 3;
  opt.episode_steps = 500;
  RuleFollower a, b;
  const auto s1 = run_naturalistic(a, cfg, opt);
  const auto s2 = run_naturalistic(b, cfg, opt);
  EXPECT_EQ(s1.config_hash, s2.config_hash);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(s1.episodes[i].mean_th, s2.episodes[i].mean_th);

  CampaignOptions other = opt;
  other.seed = 1;
  EXPECT_NE(campaign_hash(cfg, opt), campaign_hash(cfg, other));
  EXPECT_NE(scenario_seed(0, 0), scenario_seed(0, 1));
}

TEST(ActorControllerTest, ValidatesShapeAndResetsMemory) {
  const ddpg::Agent agent(ddpg::Variant::kDeep, ddpg::Hyperparams{}, 2);
  ActorController ctl(agent.actor(), "deep");
  env::EnvConfig cfg;
  CampaignOptions opt;
  opt.episodes = 2;
  opt.episode_steps = 200;
  const auto s1 = run_naturalistic(ctl, cfg, opt);
  const auto s2 = run_naturalistic(ctl, cfg, opt);
  EXPECT_EQ(s1.episodes[1].mean_th, s2.episodes[1].mean_th);
  EXPECT_EQ(s1.label, "deep");

  nn::NetworkSpec spec;
  spec.input_dim = 5;
  spec.hidden = {{nn::LayerKind::kDense, 3, nn::Activation::kRelu}};
  Rng rng(3);
  EXPECT_THROW(ActorController(nn::Network(spec, rng), "bad"), ShapeError);
}

TEST(MetricsIoTest, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "cagerl_metrics_test.csv";
  const std::vector<EpisodeMetrics> eps{metrics(0, false, 10.125, 40, 3, 1, 1.2, 2.0),
                                        metrics(1, true, 0, 20, 9, 2, 0, 1.6)};
  write_metrics(eps, path);
  const auto back = read_metrics(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].min_x_rel, 10.125);
  EXPECT_TRUE(back[1].collision);
  EXPECT_EQ(back[1].mean_th, 1.6);
  std::filesystem::remove(path);
}

TEST(SummaryTableTest, SevenRowsOneColumnPerCampaign) {
  CampaignSummary a{"deep", "h1", {metrics(0, false, 10, 40, 3, 1, 1.2, 2.0)}, {}};
  a.total = aggregate(a.episodes);
  CampaignSummary b{"shallow", "h1", {metrics(0, true, 0, 30, 5, 2, 0, 1.8)}, {}};
  b.total = aggregate(b.episodes);
  const std::string table = summary_table({a, b});
  for (const char* row : {"min. x_rel [m]", "mean x_rel [m]", "max. v_rel [m/s]",
                          "mean v_rel [m/s]", "min. TH [s]", "mean TH [s]", "collisions"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
  EXPECT_NE(table.find("deep"), std::string::npos);
  EXPECT_NE(table.find("shallow"), std::string::npos);
  std::istringstream csv(summary_csv({a, b}));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 8);
}

}  // namespace
}  // namespace cagerl::harness
