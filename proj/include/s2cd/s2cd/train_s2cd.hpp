#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/core/random.hpp"
#include "s2cd/mdp/highway_env.hpp"
#include "s2cd/ppo/learner.hpp"
#include "s2cd/ppo/metrics.hpp"
#include "s2cd/ppo/train_ppo.hpp"
#include "s2cd/s2cd/s2cd_loss.hpp"
#include "s2cd/s2cd/switching.hpp"
#include "s2cd/teacher/bundle.hpp"

namespace s2cd::engine {

inline constexpr std::size_t kAugmentedSize = mdp::kObservationSize + 3;

/// Raw observation followed by the one-hot teacher action.
inline std::vector<double> augment(std::span<const double> obs, int teacher_action) {
  std::vector<double> out(obs.begin(), obs.end());
  for (int a = 0; a < 3; ++a) out.push_back(a == teacher_action ? 1.0 : 0.0);
  return out;
}

/// Greedy student decision used at evaluation time; the teacher only supplies
/// its action as input and never overrides.
inline int student_greedy_action(const nn::DenseNet& actor, const teacher::TeacherBundle& bundle,
                                 std::span<const double> obs) {
  const auto advice = teacher::teacher_advise(bundle, obs);
  return ppo::argmax_action(actor.evaluate(augment(obs, advice.action)));
}

/// Presents the augmented observation to a plain learner; the baseline that
/// S2CD reduces to when the teacher never acts.
template <mdp::Environment Env>
class AugmentedEnv {
 public:
  AugmentedEnv(Env& env, const teacher::TeacherBundle& bundle) : env_(env), bundle_(bundle) {}
  std::vector<double> reset() { return wrap(env_.reset()); }
  mdp::EnvStep step(int action) {
    auto s = env_.step(action);
    s.observation = wrap(s.observation);
    return s;
  }
  std::size_t observation_size() const { return kAugmentedSize; }

 private:
  std::vector<double> wrap(const std::vector<double>& obs) const {
    return augment(obs, teacher::teacher_advise(bundle_, obs).action);
  }
  Env& env_;
  const teacher::TeacherBundle& bundle_;
};

struct CollectStats {
  std::size_t steps = 0;
  std::size_t interventions = 0;
  std::size_t teacher_entries = 0;
  std::size_t episodes_finished = 0;
  double kl_sum = 0.0;
};

/// Environment cursor carried across collection phases.
struct CollectorState {
  std::vector<double> obs;  // raw observation awaiting a decision
  std::size_t episodes_finished = 0;
};

/// Gathers `steps` decisions under the teacher-gated mixed policy. Returns the
/// dual-source buffer with advantages and return targets filled (unnormalized).
template <mdp::Environment Env>
std::vector<ppo::Transition> collect_dual(Env& env, CollectorState& cursor, const ppo::ActorCritic& ac,
                                          const teacher::TeacherBundle& bundle, const S2cdHyper& hp, double tau,
                                          std::size_t steps, Rng& rng, CollectStats& stats,
                                          ppo::EpisodeTracker* tracker = nullptr) {
  std::vector<ppo::Transition> executed;
  struct Companion {
    std::size_t index;
    ppo::Transition t;
  };
  std::vector<Companion> companions;
  executed.reserve(steps);
  bool last_done = false;
  std::vector<double> aug;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto advice = teacher::teacher_advise(bundle, cursor.obs);
    aug = augment(cursor.obs, advice.action);
    ppo::Transition t;
    t.probs_old = ppo::to_probs3(ac.actor.evaluate(aug));
    const int a_s = hp.sample_student ? ppo::sample_action(t.probs_old, rng) : ppo::argmax_action(t.probs_old);
    const int a_t = advice.action;
    const auto decision = switch_action(advice.q_pred[a_t], advice.q_pred[a_s], tau, hp.switching);
    const int a = decision.intervened ? a_t : a_s;

    t.obs = aug;
    t.action = a;
    t.logprob_old = std::log(t.probs_old[a]);
    t.value = ac.critic.evaluate(aug)[0];
    t.origin = decision.intervened ? ppo::Origin::Teacher : ppo::Origin::Student;
    t.teacher_probs = advice.probs;
    t.adaptive_eps = adaptive_epsilon(t.probs_old[a_s], t.probs_old[a_t], hp.psi);
    stats.kl_sum += kl_penalty(advice.probs, t.probs_old);

    const mdp::EnvStep s = env.step(a);
    if (tracker) tracker->record(s);
    t.reward = s.reward.total;
    t.done = s.done;
    last_done = s.done;

    if (hp.flags.dual_source && a_t != a) {
      ppo::Transition c = t;
      c.action = a_t;
      c.logprob_old = std::log(t.probs_old[a_t]);
      c.origin = ppo::Origin::Teacher;
      c.reward = advice.r_pred;
      c.executed = false;
      companions.push_back({executed.size(), std::move(c)});
    }
    stats.interventions += decision.intervened ? 1 : 0;
    ++stats.steps;
    executed.push_back(std::move(t));

    if (s.done) {
      ++cursor.episodes_finished;
      ++stats.episodes_finished;
      cursor.obs = env.reset();
    } else {
      cursor.obs = s.observation;
    }
  }

  double bootstrap = 0.0;
  if (!last_done) {
    const auto advice = teacher::teacher_advise(bundle, cursor.obs);
    bootstrap = ac.critic.evaluate(augment(cursor.obs, advice.action))[0];
  }
  ppo::assign_gae(executed, bootstrap, hp.ppo.gamma, hp.ppo.gae_lambda);

  // Teacher-predicted entries reuse the realized bootstrap: r_pred + gamma V(s') - V(s).
  std::vector<ppo::Transition> buffer;
  buffer.reserve(executed.size() + companions.size());
  std::size_t next_companion = 0;
  for (std::size_t i = 0; i < executed.size(); ++i) {
    buffer.push_back(executed[i]);
    if (executed[i].origin == ppo::Origin::Teacher) ++stats.teacher_entries;
    while (next_companion < companions.size() && companions[next_companion].index == i) {
      ppo::Transition c = std::move(companions[next_companion].t);
      const double next_value = c.done ? 0.0 : (i + 1 < executed.size() ? executed[i + 1].value : bootstrap);
      c.advantage = c.reward + hp.ppo.gamma * next_value - c.value;
      c.return_target = c.advantage + c.value;
      buffer.push_back(std::move(c));
      ++stats.teacher_entries;
      ++next_companion;
    }
  }
  return buffer;
}

struct S2cdResult {
  ppo::ActorCritic nets;
  std::vector<ppo::PhaseMetrics> metrics;
  std::size_t steps = 0;
  std::size_t episodes = 0;
};

/// Teacher-student training loop. tau is fixed per phase from the number of
/// episodes finished before the phase began.
template <mdp::Environment Env>
S2cdResult train_s2cd(Env& env, const teacher::TeacherBundle& bundle, const S2cdHyper& hp, std::uint64_t seed) {
  hp.validate();
  bundle.validate();
  if (env.observation_size() != bundle.actor.spec().input_dim)
    throw ConfigError("environment observation size does not match the teacher bundle");
  Rng rng(seed);
  S2cdResult out;
  out.nets = ppo::make_actor_critic(kAugmentedSize, hp.ppo, rng);
  ppo::ActorCritic& ac = out.nets;
  ppo::EpisodeTracker tracker;
  CollectorState cursor{env.reset(), 0};

  std::size_t phase = 0;
  while (out.steps < hp.ppo.total_steps) {
    const std::size_t phase_start = out.steps;
    const std::size_t len = std::min(hp.ppo.steps_per_phase, hp.ppo.total_steps - out.steps);
    const double tau =
        decay_tau(static_cast<double>(cursor.episodes_finished), hp.switching, hp.flags.intervention_decay);
    CollectStats cs;
    auto buffer = collect_dual(env, cursor, ac, bundle, hp, tau, len, rng, cs, &tracker);
    ppo::normalize_buffer_advantages(buffer);
    out.steps += len;

    ppo::PhaseMetrics m;
    m.step = out.steps;
    tracker.flush_into(m);
    m.tau = tau;
    m.intervention_rate = static_cast<double>(cs.interventions) / static_cast<double>(cs.steps);
    m.mean_kl = cs.kl_sum / static_cast<double>(cs.steps);
    m.teacher_sample_fraction = static_cast<double>(cs.teacher_entries) / static_cast<double>(buffer.size());
    try {
      const double progress = static_cast<double>(phase_start) / static_cast<double>(hp.ppo.total_steps);
      const auto u = ppo::run_update(ac, buffer, hp.ppo, progress, rng,
                                     [&](std::span<const ppo::Transition* const> mb, const nn::DenseNet& actor,
                                         const nn::DenseNet& critic) { return s2cd_loss(mb, actor, critic, hp, tau); });
      m.entropy = u.entropy;
      m.kl = u.approx_kl;
    } catch (const NumericalError& e) {
      throw NumericalError(ppo::phase_diagnostic(phase, out.steps, out.metrics) + ": " + e.what());
    }
    out.metrics.push_back(m);
    out.episodes = cursor.episodes_finished;
    ++phase;
  }
  return out;
}

}  // namespace s2cd::engine
