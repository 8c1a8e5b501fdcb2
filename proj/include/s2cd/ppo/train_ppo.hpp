#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/core/random.hpp"
#include "s2cd/mdp/highway_env.hpp"
#include "s2cd/ppo/learner.hpp"
#include "s2cd/ppo/metrics.hpp"

namespace s2cd::ppo {

/// Optional callback run after each phase's update with the phase's rollout and
/// the post-step observation of every transition.
using PhaseHook = std::function<void(const ActorCritic&, std::span<const Transition>,
                                     std::span<const std::vector<double>> next_obs, PhaseMetrics&)>;

struct TrainResult {
  ActorCritic nets;
  std::vector<PhaseMetrics> metrics;
  std::size_t steps = 0;
  std::size_t episodes = 0;
};

inline std::string phase_diagnostic(std::size_t phase, std::size_t step, const std::vector<PhaseMetrics>& log) {
  std::string msg = "training aborted at phase " + std::to_string(phase) + " (step " + std::to_string(step) + ")";
  if (!log.empty()) {
    const auto& m = log.back();
    msg += "; last phase: mean_return=" + format_double(m.mean_return) + " entropy=" + format_double(m.entropy) +
           " kl=" + format_double(m.kl);
  }
  return msg;
}

/// Plain PPO: alternating fixed-length collection phases and minibatched
/// clipped-objective updates.
template <mdp::Environment Env>
TrainResult train_ppo(Env& env, const HyperParams& hp, std::uint64_t seed, const PhaseHook& hook = {}) {
  hp.validate();
  Rng rng(seed);
  TrainResult out;
  out.nets = make_actor_critic(env.observation_size(), hp, rng);
  ActorCritic& ac = out.nets;
  EpisodeTracker tracker;

  std::vector<double> obs = env.reset();
  std::vector<Transition> buffer;
  std::vector<std::vector<double>> next_obs;
  std::size_t phase = 0;
  while (out.steps < hp.total_steps) {
    const std::size_t phase_start = out.steps;
    const std::size_t len = std::min(hp.steps_per_phase, hp.total_steps - out.steps);
    buffer.clear();
    next_obs.clear();
    bool last_done = false;
    for (std::size_t i = 0; i < len; ++i) {
      Transition t;
      t.obs = obs;
      t.probs_old = to_probs3(ac.actor.evaluate(obs));
      t.action = sample_action(t.probs_old, rng);
      t.logprob_old = std::log(t.probs_old[t.action]);
      t.value = ac.critic.evaluate(obs)[0];
      const mdp::EnvStep s = env.step(t.action);
      tracker.record(s);
      t.reward = s.reward.total;
      t.done = s.done;
      last_done = s.done;
      buffer.push_back(std::move(t));
      next_obs.push_back(s.observation);
      if (s.done) {
        ++out.episodes;
        obs = env.reset();
      } else {
        obs = s.observation;
      }
    }
    out.steps += len;

    const double bootstrap = last_done ? 0.0 : ac.critic.evaluate(obs)[0];
    assign_gae(buffer, bootstrap, hp.gamma, hp.gae_lambda);
    normalize_buffer_advantages(buffer);

    PhaseMetrics m;
    m.step = out.steps;
    tracker.flush_into(m);
    try {
      const double progress = static_cast<double>(phase_start) / static_cast<double>(hp.total_steps);
      const auto params = hp.loss_params();
      const UpdateStats u = run_update(ac, buffer, hp, progress, rng,
                                       [&](std::span<const Transition* const> mb, const nn::DenseNet& actor,
                                           const nn::DenseNet& critic) { return ppo_loss(mb, actor, critic, params); });
      m.entropy = u.entropy;
      m.kl = u.approx_kl;
    } catch (const NumericalError& e) {
      throw NumericalError(phase_diagnostic(phase, out.steps, out.metrics) + ": " + e.what());
    }
    if (hook) hook(ac, buffer, next_obs, m);
    out.metrics.push_back(m);
    ++phase;
  }
  return out;
}

}  // namespace s2cd::ppo
