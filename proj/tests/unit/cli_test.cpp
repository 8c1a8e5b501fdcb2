#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "s2cd/cli/commands.hpp"
#include "s2cd/cli/run_config.hpp"
#include "s2cd/eval/evaluate.hpp"

using namespace s2cd;
using namespace s2cd::cli;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("s2cd_cli_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A run small enough for a unit test: Simple world, short budgets.
json tiny_config() {
  return json::parse(R"({
    "sim": {"fidelity": "simple", "density": "low"},
    "ppo": {"total_steps": 1200, "steps_per_phase": 400, "update_epochs": 1, "hidden": [8, 8]},
    "teacher": {"window_rows": 2000},
    "eval": {"episodes": 2},
    "theory": {"instances": 30},
    "seeds": [4]
  })");
}

}  // namespace

TEST(RunConfig, DefaultsAndOverrides) {
  const auto d = parse_run_config(json::object());
  EXPECT_EQ(d.sim.fidelity, highway::Fidelity::Complex);
  EXPECT_EQ(d.ppo.minibatch, 64u);
  EXPECT_FALSE(d.total_steps.has_value());
  EXPECT_EQ(d.seeds, (std::vector<std::uint64_t>{1, 2, 3}));

  const auto c = parse_run_config(tiny_config());
  EXPECT_EQ(c.sim.fidelity, highway::Fidelity::Simple);
  EXPECT_EQ(c.sim.density, highway::Density::Low);
  EXPECT_EQ(*c.total_steps, 1200u);
  EXPECT_EQ(c.ppo.hidden, (std::vector<std::size_t>{8, 8}));
  EXPECT_EQ(s2cd_hyper(c, 60000).ppo.total_steps, 1200u);
  EXPECT_EQ(s2cd_hyper(d, 60000).ppo.total_steps, 60000u);
  EXPECT_EQ(teacher_config(d).hp.total_steps, 100000u);
}

TEST(RunConfig, ResolvedConfigRoundTrips) {
  const auto c = parse_run_config(tiny_config());
  EXPECT_EQ(to_json(parse_run_config(to_json(c))), to_json(c));
}

TEST(RunConfig, RejectsUnknownKeysWrongTypesAndBadValues) {
  const char* bad[] = {
      R"({"simm": {}})",
      R"({"sim": {"lanes": 3}})",
      R"({"sim": {"density": "extreme"}})",
      R"({"sim": {"fidelity": "hi-fi"}})",
      R"({"ppo": {"gamma": "high"}})",
      R"({"ppo": {"minibatch": -4}})",
      R"({"ppo": {"minibatch": 1.5}})",
      R"({"ppo": {"gamma": 1.0}})",
      R"({"s2cd": {"psi": 0.5}})",
      R"({"s2cd": {"dual_source": 1}})",
      R"({"teacher": {"quality": "medium"}})",
      R"({"eval": {"densities": []}})",
      R"({"eval": {"episodes": 0}})",
      R"({"theory": {"max_states": 50}})",
      R"({"seeds": []})",
      R"([1, 2])",
  };
  for (const char* text : bad) EXPECT_THROW(parse_run_config(json::parse(text)), ConfigError) << text;
}

TEST(RunConfig, LoadReportsMissingAndMalformedFiles) {
  const auto dir = scratch("load");
  EXPECT_THROW(load_run_config(dir / "absent.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{\"sim\": ";
  EXPECT_THROW(load_run_config(dir / "broken.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Ablations, ListParsing) {
  engine::AblationFlags f;
  apply_ablations(f, "no-kl,no-decay");
  EXPECT_TRUE(f.dual_source);
  EXPECT_TRUE(f.adaptive_clip);
  EXPECT_FALSE(f.kl_constraint);
  EXPECT_FALSE(f.intervention_decay);
  apply_ablations(f, "");
  EXPECT_FALSE(f.kl_constraint);
  EXPECT_THROW(apply_ablations(f, "no-teacher"), ConfigError);

  EXPECT_EQ(ablation_variants({}, "").size(), 5u);
  const auto picked = ablation_variants({}, "no-adaptive-clip");
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0].name, "full");
  EXPECT_FALSE(picked[1].flags.adaptive_clip);
  EXPECT_THROW(ablation_variants({}, "no-everything"), ConfigError);
}

TEST(Evaluate, EmptyRoadFollowerAlwaysSucceeds) {
  auto sim = highway::SimConfig::simple(highway::Density::Medium, 0);
  sim.traffic = false;
  mdp::HighwayEnv env(sim, {}, 3);
  const auto rows = eval::run_episodes(env, 5, [](const std::vector<double>&, const auto&) { return 0; }, 7, "medium");
  const auto a = eval::aggregate(rows);
  EXPECT_EQ(a.episodes, 5u);
  EXPECT_EQ(a.success_rate, 100.0);
  EXPECT_EQ(a.collisions, 0u);
  EXPECT_EQ(a.episodic_cost, 0.0);
  for (const auto& r : rows) {
    EXPECT_EQ(r.seed, 7u);
    EXPECT_NEAR(r.episodic_return, r.episodic_reward - r.episodic_cost, 1e-9);
  }
}

TEST(Evaluate, AggregateAveragesAndCountsFromRecords) {
  std::vector<eval::EpisodeRecord> rows(4);
  for (int i = 0; i < 4; ++i) {
    rows[i].episodic_reward = i;
    rows[i].episodic_cost = 0.5 * i;
    rows[i].episodic_return = 0.5 * i;
    rows[i].mean_speed = 20 + i;
    rows[i].success = i != 2;
    rows[i].collision = i == 2;
    rows[i].seed = i % 2;
  }
  const auto a = eval::aggregate(rows);
  EXPECT_DOUBLE_EQ(a.episodic_reward, 1.5);
  EXPECT_DOUBLE_EQ(a.episodic_cost, 0.75);
  EXPECT_DOUBLE_EQ(a.episodic_return, 0.75);
  EXPECT_DOUBLE_EQ(a.episodic_speed, 21.5);
  EXPECT_DOUBLE_EQ(a.success_rate, 75.0);
  EXPECT_EQ(a.collisions, 1u);
  const auto s = eval::summarize(rows);
  ASSERT_EQ(s.per_seed.size(), 2u);
  EXPECT_DOUBLE_EQ(s.per_seed[0].second.success_rate, 50.0);
  EXPECT_DOUBLE_EQ(s.per_seed[1].second.success_rate, 100.0);
  EXPECT_EQ(eval::aggregate({}).episodes, 0u);
}

TEST(Commands, PipelineWritesArtifactsDeterministically) {
  const auto dir = scratch("pipeline");
  write_json(dir / "config.json", tiny_config());
  std::ostringstream log;
  auto opts = [&](const std::string& out) {
    Options o;
    o.config = dir / "config.json";
    o.out = dir / out;
    return o;
  };

  auto t = opts("teacher");
  ASSERT_EQ(cmd_train_teacher(t, log), 0);
  for (const char* f : {"config.json", "metrics.csv", "fit_report.json", "bundle/manifest.json", "bundle/actor.json"})
    EXPECT_TRUE(std::filesystem::exists(t.out / f)) << f;

  for (const char* name : {"student_a", "student_b"}) {
    auto s = opts(name);
    s.bundle = t.out / "bundle";
    ASSERT_EQ(cmd_train_student(s, log), 0);
  }
  EXPECT_EQ(slurp(dir / "student_a/student/actor.json"), slurp(dir / "student_b/student/actor.json"));
  EXPECT_EQ(slurp(dir / "student_a/metrics.csv"), slurp(dir / "student_b/metrics.csv"));
  EXPECT_EQ(json::parse(slurp(dir / "student_a/student/run.json"))["mode"], "s2cd");

  auto b = opts("baseline");
  b.baseline = true;
  ASSERT_EQ(cmd_train_student(b, log), 0);
  EXPECT_FALSE(std::filesystem::exists(b.out / "teacher"));

  for (const char* ckpt : {"student_a", "baseline", "teacher"}) {
    auto e = opts(std::string("eval_") + ckpt);
    e.checkpoint = dir / ckpt;
    ASSERT_EQ(cmd_evaluate(e, log), 0);
    const auto j = json::parse(slurp(e.out / "eval_summary.json"));
    EXPECT_EQ(j["episodes"], 2);
    EXPECT_TRUE(std::filesystem::exists(e.out / "episodes.csv"));
  }
  EXPECT_EQ(json::parse(slurp(dir / "eval_student_a/eval_summary.json"))["policy"], "s2cd");
  EXPECT_EQ(json::parse(slurp(dir / "eval_baseline/eval_summary.json"))["policy"], "ppo");

  auto a = opts("ablate");
  a.bundle = t.out / "bundle";
  a.ablate = "no-kl";
  ASSERT_EQ(cmd_ablate(a, log), 0);
  const auto abl = json::parse(slurp(a.out / "ablation_summary.json"));
  EXPECT_TRUE(abl.contains("full"));
  EXPECT_TRUE(abl.contains("no-kl"));
  EXPECT_FALSE(abl["no-kl"]["flags"]["kl_constraint"].get<bool>());

  auto th = opts("theory");
  EXPECT_EQ(cmd_theory(th, log), 0);
  EXPECT_EQ(json::parse(slurp(th.out / "theory_report.json"))["instances"].size(), 30u);

  auto missing = opts("nothing");
  missing.checkpoint = dir / "does_not_exist";
  EXPECT_THROW(cmd_evaluate(missing, log), ConfigError);
  auto nobundle = opts("nobundle");
  EXPECT_THROW(cmd_train_student(nobundle, log), ConfigError);
  std::filesystem::remove_all(dir);
}
