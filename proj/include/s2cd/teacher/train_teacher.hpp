#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "s2cd/eval/evaluate.hpp"
#include "s2cd/highway/types.hpp"
#include "s2cd/mdp/highway_env.hpp"
#include "s2cd/ppo/train_ppo.hpp"
#include "s2cd/teacher/bundle.hpp"
#include "s2cd/teacher/value_heads.hpp"

namespace s2cd::teacher {

/// High trains on twice Low's budget; Complex trains directly in the complex world.
inline std::size_t default_teacher_steps(Quality q) { return q == Quality::Low ? 50000 : 100000; }

struct TeacherTrainConfig {
  Quality quality = Quality::High;
  ppo::HyperParams hp = [] {
    ppo::HyperParams h;
    h.total_steps = 100000;
    return h;
  }();
  highway::Density density = highway::Density::Medium;
  mdp::RewardConfig reward;
  FitConfig fit{3, 64, 1e-3, 10.0, 1000};
  std::size_t window_rows = 20000;  // most recent rows kept for the value-head fits
  std::size_t eval_episodes = 50;
  std::uint64_t eval_seed = 20240;
};

inline highway::SimConfig teacher_sim_config(const TeacherTrainConfig& cfg) {
  auto sim = cfg.quality == Quality::Complex ? highway::SimConfig::complex() : highway::SimConfig::simple();
  sim.density = cfg.density;
  return sim;
}

struct TeacherTrainResult {
  TeacherBundle bundle;
  std::vector<ppo::PhaseMetrics> metrics;
  FitReport last_fit;
  std::size_t rows_seen = 0;
};

/// Greedy evaluation of a bare policy network; returns the success fraction.
inline double evaluate_policy_success(const nn::DenseNet& actor, const highway::SimConfig& sim,
                                      const mdp::RewardConfig& reward, std::size_t episodes, std::uint64_t seed) {
  mdp::HighwayEnv env(sim, reward, seed);
  const auto rows = eval::run_episodes(env, episodes, [&](const std::vector<double>& obs, const auto&) {
    return ppo::argmax_action(actor.evaluate(obs));
  });
  return eval::aggregate(rows).success_rate / 100.0;
}

/// Teacher training: PPO in the configured world, with the Return and Q-Value
/// heads regressed after every phase on the recently visited (s, a) pairs.
/// Q targets are one-step TD values under the freshly updated critic.
inline TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg, std::uint64_t seed) {
  const auto sim = teacher_sim_config(cfg);
  mdp::HighwayEnv env(sim, cfg.reward, derive_seed(seed, 1));
  Rng head_rng(derive_seed(seed, 2));
  ValueHeadFitter fitter(nn::DenseNet::initialized(value_head_spec(mdp::kObservationSize, cfg.hp.hidden), head_rng),
                         nn::DenseNet::initialized(value_head_spec(mdp::kObservationSize, cfg.hp.hidden), head_rng),
                         cfg.fit);
  std::deque<SupervisedRow> window;
  TeacherTrainResult out;

  auto hook = [&](const ppo::ActorCritic& ac, std::span<const ppo::Transition> rollout,
                  std::span<const std::vector<double>> next_obs, ppo::PhaseMetrics&) {
    for (std::size_t i = 0; i < rollout.size(); ++i) {
      const auto& t = rollout[i];
      SupervisedRow row{t.obs, t.action, t.reward, t.reward};
      if (!t.done) row.q_target += cfg.hp.gamma * ac.critic.evaluate(next_obs[i])[0];
      window.push_back(std::move(row));
      if (window.size() > cfg.window_rows) window.pop_front();
    }
    out.rows_seen += rollout.size();
    if (window.size() >= cfg.fit.min_rows) {
      const std::vector<SupervisedRow> rows(window.begin(), window.end());
      out.last_fit = fitter.fit(rows, head_rng);
    }
  };
  auto trained = ppo::train_ppo(env, cfg.hp, derive_seed(seed, 0), hook);

  out.bundle.actor = std::move(trained.nets.actor);
  out.bundle.critic = std::move(trained.nets.critic);
  out.bundle.return_net = fitter.return_net();
  out.bundle.qvalue_net = fitter.qvalue_net();
  out.bundle.quality = cfg.quality;
  out.bundle.training_steps = cfg.hp.total_steps;
  out.bundle.seed = seed;
  out.bundle.eval_success = evaluate_policy_success(out.bundle.actor, sim, cfg.reward, cfg.eval_episodes, cfg.eval_seed);
  out.metrics = std::move(trained.metrics);
  return out;
}

}  // namespace s2cd::teacher
