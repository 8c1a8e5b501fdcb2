#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cd/cli/run_config.hpp"
#include "s2cd/eval/evaluate.hpp"
#include "s2cd/mdp/highway_env.hpp"
#include "s2cd/nn/checkpoint.hpp"
#include "s2cd/ppo/train_ppo.hpp"
#include "s2cd/s2cd/train_s2cd.hpp"
#include "s2cd/teacher/bundle.hpp"
#include "s2cd/teacher/train_teacher.hpp"
#include "s2cd/theory/theorems.hpp"

namespace s2cd::cli {

namespace fs = std::filesystem;

inline constexpr std::size_t kStudentSteps = 60000;
inline constexpr std::size_t kBaselineSteps = 100000;

struct Options {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  fs::path out = "out";
  std::string ablate;
  std::optional<fs::path> bundle;
  std::optional<fs::path> checkpoint;
  bool baseline = false;
};

inline RunConfig resolve_config(const Options& o) { return o.config ? load_run_config(*o.config) : RunConfig{}; }

inline std::uint64_t primary_seed(const Options& o, const RunConfig& c) { return o.seed.value_or(c.seeds.front()); }

inline std::vector<std::uint64_t> seed_list(const Options& o, const RunConfig& c) {
  return o.seed ? std::vector<std::uint64_t>{*o.seed} : c.seeds;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { ppo::write_text(path, j.dump(2) + "\n"); }

inline void write_config_snapshot(const fs::path& out, const RunConfig& c) { write_json(out / "config.json", to_json(c)); }

// ---------------------------------------------------------------- train-teacher

inline int cmd_train_teacher(const Options& o, std::ostream& log) {
  const RunConfig c = resolve_config(o);
  const std::uint64_t seed = primary_seed(o, c);
  const auto tc = teacher_config(c);
  log << "training " << to_string(tc.quality) << " teacher for " << tc.hp.total_steps << " steps (seed " << seed
      << ")\n";
  const auto res = teacher::train_teacher(tc, seed);
  fs::create_directories(o.out);
  write_config_snapshot(o.out, c);
  teacher::save_bundle(res.bundle, o.out / "bundle");
  ppo::write_text(o.out / "metrics.csv", ppo::metrics_csv(res.metrics, false));
  write_json(o.out / "fit_report.json", {{"rows_seen", res.rows_seen},
                                         {"train_rows", res.last_fit.train_rows},
                                         {"heldout_rows", res.last_fit.heldout_rows},
                                         {"return_train_mse", res.last_fit.return_train_mse},
                                         {"return_heldout_mse", res.last_fit.return_heldout_mse},
                                         {"q_train_mse", res.last_fit.q_train_mse},
                                         {"q_heldout_mse", res.last_fit.q_heldout_mse}});
  log << "eval_success " << res.bundle.eval_success << "\n";
  return 0;
}

// ---------------------------------------------------------------- train-student

struct StudentRun {
  ppo::ActorCritic nets;
  std::vector<ppo::PhaseMetrics> metrics;
  std::size_t steps = 0;
  std::size_t episodes = 0;
  bool baseline = false;
};

/// S2CD student (or plain PPO when `baseline`) in the configured world.
inline StudentRun run_student(const RunConfig& c, const teacher::TeacherBundle* bundle, bool baseline,
                              const engine::AblationFlags& flags, std::uint64_t seed) {
  mdp::HighwayEnv env(c.sim, c.reward, derive_seed(seed, 1));
  StudentRun r;
  r.baseline = baseline;
  if (baseline) {
    ppo::HyperParams hp = c.ppo;
    hp.total_steps = c.total_steps.value_or(kBaselineSteps);
    auto t = ppo::train_ppo(env, hp, derive_seed(seed, 0));
    r.nets = std::move(t.nets);
    r.metrics = std::move(t.metrics);
    r.steps = t.steps;
    r.episodes = t.episodes;
  } else {
    if (!bundle) throw ConfigError("train-student needs --bundle unless --baseline is given");
    auto hp = s2cd_hyper(c, kStudentSteps);
    hp.flags = flags;
    auto t = engine::train_s2cd(env, *bundle, hp, derive_seed(seed, 0));
    r.nets = std::move(t.nets);
    r.metrics = std::move(t.metrics);
    r.steps = t.steps;
    r.episodes = t.episodes;
  }
  return r;
}

inline nlohmann::json flags_json(const engine::AblationFlags& f) {
  return {{"dual_source", f.dual_source},
          {"adaptive_clip", f.adaptive_clip},
          {"kl_constraint", f.kl_constraint},
          {"intervention_decay", f.intervention_decay}};
}

inline void save_student(const fs::path& out, const StudentRun& r, const teacher::TeacherBundle* bundle,
                         const engine::AblationFlags& flags, std::uint64_t seed) {
  fs::create_directories(out / "student");
  nn::save_net(r.nets.actor, out / "student" / "actor.json");
  nn::save_net(r.nets.critic, out / "student" / "critic.json");
  nlohmann::json run = {{"mode", r.baseline ? "ppo" : "s2cd"}, {"steps", r.steps}, {"episodes", r.episodes},
                        {"seed", seed}};
  if (!r.baseline) run["flags"] = flags_json(flags);
  write_json(out / "student" / "run.json", run);
  if (bundle) teacher::save_bundle(*bundle, out / "teacher");
  ppo::write_text(out / "metrics.csv", ppo::metrics_csv(r.metrics, !r.baseline));
}

inline int cmd_train_student(const Options& o, std::ostream& log) {
  const RunConfig c = resolve_config(o);
  engine::AblationFlags flags = c.flags;
  apply_ablations(flags, o.ablate);
  std::optional<teacher::TeacherBundle> bundle;
  if (!o.baseline) {
    if (!o.bundle) throw ConfigError("train-student needs --bundle unless --baseline is given");
    bundle = teacher::load_bundle(*o.bundle);
  }
  const std::uint64_t seed = primary_seed(o, c);
  log << (o.baseline ? "training PPO baseline" : "training S2CD student") << " (seed " << seed << ")\n";
  const auto r = run_student(c, bundle ? &*bundle : nullptr, o.baseline, flags, seed);
  fs::create_directories(o.out);
  write_config_snapshot(o.out, c);
  save_student(o.out, r, bundle ? &*bundle : nullptr, flags, seed);
  return 0;
}

// ---------------------------------------------------------------- evaluate

/// A greedy policy restored from a checkpoint directory: a train-student output
/// (student/ plus optional teacher/) or a teacher bundle.
struct LoadedPolicy {
  nn::DenseNet actor;
  std::optional<teacher::TeacherBundle> teacher;  // present when the actor reads augmented observations
  std::string kind;

  int act(const std::vector<double>& obs) const {
    if (teacher) return engine::student_greedy_action(actor, *teacher, obs);
    return ppo::argmax_action(actor.evaluate(obs));
  }
};

inline LoadedPolicy load_policy(const fs::path& dir) {
  LoadedPolicy p;
  if (fs::exists(dir / "student" / "run.json")) {
    p.actor = nn::load_net(dir / "student" / "actor.json");
    if (p.actor.spec().input_dim == engine::kAugmentedSize) {
      p.teacher = teacher::load_bundle(dir / "teacher");
      p.kind = "s2cd";
    } else {
      p.kind = "ppo";
    }
  } else if (fs::exists(dir / teacher::kManifestName)) {
    p.actor = teacher::load_bundle(dir).actor;
    p.kind = "teacher";
  } else if (fs::exists(dir / "bundle" / teacher::kManifestName)) {
    p.actor = teacher::load_bundle(dir / "bundle").actor;
    p.kind = "teacher";
  } else {
    throw ConfigError("no checkpoint found in " + dir.string());
  }
  const std::size_t expected = p.teacher ? engine::kAugmentedSize : mdp::kObservationSize;
  if (p.actor.spec().input_dim != expected || p.actor.spec().head != nn::Head::SoftmaxPolicy)
    throw ConfigError("checkpoint policy does not match the " + std::to_string(expected) + "-number observation");
  return p;
}

inline eval::EvalSummary evaluate_policy(const LoadedPolicy& policy, const RunConfig& c,
                                         const std::vector<std::uint64_t>& seeds) {
  std::vector<eval::EpisodeRecord> rows;
  for (auto seed : seeds)
    for (std::size_t d = 0; d < c.eval.densities.size(); ++d) {
      highway::SimConfig sim = c.sim;
      sim.density = c.eval.densities[d];
      mdp::HighwayEnv env(sim, c.reward, derive_seed(derive_seed(c.eval.seed, seed), d));
      auto part = eval::run_episodes(
          env, c.eval.episodes, [&](const std::vector<double>& obs, const auto&) { return policy.act(obs); }, seed,
          std::string(to_string(sim.density)));
      rows.insert(rows.end(), part.begin(), part.end());
    }
  return eval::summarize(std::move(rows));
}

inline int cmd_evaluate(const Options& o, std::ostream& log) {
  const RunConfig c = resolve_config(o);
  if (!o.checkpoint) throw ConfigError("evaluate needs --checkpoint");
  const auto policy = load_policy(*o.checkpoint);
  const auto summary = evaluate_policy(policy, c, seed_list(o, c));
  fs::create_directories(o.out);
  write_config_snapshot(o.out, c);
  auto j = eval::to_json(summary);
  j["policy"] = policy.kind;
  write_json(o.out / "eval_summary.json", j);
  ppo::write_text(o.out / "episodes.csv", eval::episodes_csv(summary.episodes));
  log << policy.kind << " success_rate " << summary.overall.success_rate << "%\n";
  return 0;
}

// ---------------------------------------------------------------- ablate

struct Variant {
  std::string name;
  engine::AblationFlags flags;
};

inline std::vector<Variant> ablation_variants(const engine::AblationFlags& base, const std::string& only) {
  std::vector<Variant> all{{"full", base}};
  const char* names[] = {"no-dual-source", "no-adaptive-clip", "no-kl", "no-decay"};
  for (const char* n : names) {
    Variant v{n, base};
    apply_ablations(v.flags, n);
    all.push_back(v);
  }
  if (only.empty()) return all;
  engine::AblationFlags check;
  apply_ablations(check, only);  // validates the list
  std::vector<Variant> picked{all.front()};
  for (std::size_t i = 1; i < all.size(); ++i)
    if (("," + only + ",").find("," + all[i].name + ",") != std::string::npos) picked.push_back(all[i]);
  return picked;
}

inline int cmd_ablate(const Options& o, std::ostream& log) {
  const RunConfig c = resolve_config(o);
  if (!o.bundle) throw ConfigError("ablate needs --bundle");
  const auto bundle = teacher::load_bundle(*o.bundle);
  const auto variants = ablation_variants(c.flags, o.ablate);
  const auto seeds = seed_list(o, c);
  fs::create_directories(o.out);
  write_config_snapshot(o.out, c);
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& v : variants) {
    std::vector<eval::EpisodeRecord> rows;
    for (auto seed : seeds) {
      log << "variant " << v.name << " seed " << seed << "\n";
      const auto r = run_student(c, &bundle, false, v.flags, seed);
      const fs::path dir = o.out / v.name / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      save_student(dir, r, nullptr, v.flags, seed);
      LoadedPolicy p{r.nets.actor, bundle, "s2cd"};
      auto part = evaluate_policy(p, c, {seed}).episodes;
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto s = eval::summarize(std::move(rows));
    auto j = eval::to_json(s);
    j["flags"] = flags_json(v.flags);
    summary[v.name] = j;
    ppo::write_text(o.out / v.name / "episodes.csv", eval::episodes_csv(s.episodes));
  }
  write_json(o.out / "ablation_summary.json", summary);
  return 0;
}

// ---------------------------------------------------------------- theory

inline int cmd_theory(const Options& o, std::ostream& log) {
  const RunConfig c = resolve_config(o);
  theory::SweepConfig sweep = c.theory;
  sweep.seed = primary_seed(o, c);
  const auto rep = theory::run_sweep(sweep);
  fs::create_directories(o.out);
  write_config_snapshot(o.out, c);
  write_json(o.out / "theory_report.json", rep.json);
  log << "theorem 3 violations " << rep.theorem3_violations << ", theorem 4 violations " << rep.theorem4_violations
      << "\n";
  return rep.theorem3_violations + rep.theorem4_violations == 0 ? 0 : 1;
}

}  // namespace s2cd::cli
