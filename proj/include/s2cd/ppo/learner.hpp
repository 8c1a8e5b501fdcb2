#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/core/random.hpp"
#include "s2cd/nn/adamw.hpp"
#include "s2cd/nn/dense_net.hpp"
#include "s2cd/ppo/gae.hpp"
#include "s2cd/ppo/hyper_params.hpp"
#include "s2cd/ppo/ppo_loss.hpp"
#include "s2cd/ppo/transition.hpp"

namespace s2cd::ppo {

struct ActorCritic {
  nn::DenseNet actor;
  nn::DenseNet critic;
  nn::OptimState actor_opt;
  nn::OptimState critic_opt;
};

/// Actor first, then critic, both drawn from `rng`.
inline ActorCritic make_actor_critic(std::size_t input_dim, const HyperParams& hp, Rng& rng) {
  ActorCritic ac;
  ac.actor = nn::DenseNet::initialized({input_dim, hp.hidden, 3, nn::Head::SoftmaxPolicy}, rng);
  ac.critic = nn::DenseNet::initialized({input_dim, hp.hidden, 1, nn::Head::ScalarValue}, rng);
  ac.actor_opt = nn::OptimState::for_params(ac.actor.param_count(), hp.learning_rate, hp.weight_decay, hp.lr_decay);
  ac.critic_opt = nn::OptimState::for_params(ac.critic.param_count(), hp.learning_rate, hp.weight_decay, hp.lr_decay);
  return ac;
}

inline Probs3 to_probs3(std::span<const double> p) {
  if (p.size() != 3) throw std::invalid_argument("expected a 3-action distribution");
  return {p[0], p[1], p[2]};
}

/// Inverse-CDF draw; consumes exactly one value from `rng`.
inline int sample_action(const Probs3& p, Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  return 2;
}

/// Lowest index wins ties.
inline int argmax_action(std::span<const double> p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

inline double entropy_of(const Probs3& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

/// Fills advantage/return_target of a contiguous executed rollout by GAE.
inline void assign_gae(std::vector<Transition>& rollout, double bootstrap_value, double gamma, double lambda) {
  std::vector<double> r(rollout.size()), v(rollout.size());
  std::vector<bool> d(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    r[i] = rollout[i].reward;
    v[i] = rollout[i].value;
    d[i] = rollout[i].done;
  }
  const auto g = compute_gae(r, v, d, bootstrap_value, gamma, lambda);
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    rollout[i].advantage = g.advantages[i];
    rollout[i].return_target = g.returns[i];
  }
}

inline void normalize_buffer_advantages(std::vector<Transition>& buffer) {
  std::vector<double> a(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) a[i] = buffer[i].advantage;
  normalize_advantages(a);
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i].advantage = a[i];
}

struct UpdateStats {
  double loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;  // mean KL(behaviour || updated) over the buffer
  double clip_fraction = 0.0;
  std::size_t clamped_ratios = 0;
  std::size_t minibatches = 0;
};

inline double mean_kl_to_behaviour(std::span<const Transition> buffer, const nn::DenseNet& actor) {
  if (buffer.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : buffer) {
    const auto p = actor.evaluate(t.obs);
    for (std::size_t j = 0; j < 3; ++j)
      if (t.probs_old[j] > 0.0) total += t.probs_old[j] * (std::log(t.probs_old[j]) - std::log(p[j]));
  }
  return total / static_cast<double>(buffer.size());
}

/// Minibatched epochs over `buffer`. `loss_fn(minibatch, actor, critic)` returns
/// a LossResult; shuffles use Fisher-Yates on `rng`. `progress` drives the
/// learning-rate schedule.
template <class LossFn>
UpdateStats run_update(ActorCritic& ac, std::span<const Transition> buffer, const HyperParams& hp, double progress,
                       Rng& rng, LossFn&& loss_fn) {
  UpdateStats stats;
  if (buffer.empty()) return stats;
  std::vector<std::size_t> order(buffer.size());
  std::vector<const Transition*> mb;
  for (std::size_t epoch = 0; epoch < hp.update_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += hp.minibatch) {
      const std::size_t end = std::min(order.size(), start + hp.minibatch);
      mb.clear();
      for (std::size_t i = start; i < end; ++i) mb.push_back(&buffer[order[i]]);
      LossResult res = loss_fn(std::span<const Transition* const>(mb), ac.actor, ac.critic);
      nn::clip_grad_norm(res.actor_grad, hp.max_grad_norm);
      nn::clip_grad_norm(res.critic_grad, hp.max_grad_norm);
      nn::adamw_step(ac.actor_opt, ac.actor.params(), res.actor_grad, progress);
      nn::adamw_step(ac.critic_opt, ac.critic.params(), res.critic_grad, progress);
      stats.loss += res.loss;
      stats.entropy += res.entropy;
      stats.clip_fraction += res.clip_fraction;
      stats.clamped_ratios += res.clamped_ratios;
      ++stats.minibatches;
    }
  }
  const double n = static_cast<double>(stats.minibatches);
  stats.loss /= n;
  stats.entropy /= n;
  stats.clip_fraction /= n;
  stats.approx_kl = mean_kl_to_behaviour(buffer, ac.actor);
  if (!std::isfinite(stats.loss) || !std::isfinite(stats.approx_kl)) throw NumericalError("non-finite update statistics");
  return stats;
}

}  // namespace s2cd::ppo
