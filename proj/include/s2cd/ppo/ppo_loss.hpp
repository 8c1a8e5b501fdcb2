#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/nn/dense_net.hpp"
#include "s2cd/ppo/transition.hpp"

namespace s2cd::ppo {

/// Log-ratio magnitude beyond which the probability ratio is clamped.
inline constexpr double kMaxLogRatio = 30.0;
/// Floor on the student probability inside the KL logarithm.
inline constexpr double kKlProbabilityFloor = 1e-12;

struct ClipInterval {
  double lower = 0.8;
  double upper = 1.2;
};

struct LossWeights {
  double value_coef = 0.5;
  double entropy_beta = 0.01;
  double kl_weight = 0.0;  // multiplies D_KL(teacher || student) on executed samples
};

/// Per-sample terms. `total` is the sample's own loss:
/// -surrogate + [executed] (value_coef * err^2 - beta * entropy + kl_weight * kl).
struct SampleLoss {
  double surrogate = 0.0;
  double value_error_sq = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double ratio = 1.0;
  bool ratio_clamped = false;
  bool clipped = false;
  double total = 0.0;
};

struct LossResult {
  double loss = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double teacher_kl = 0.0;
  double approx_kl = 0.0;  // mean KL(old || new) of the learner's policy
  double clip_fraction = 0.0;
  std::size_t clamped_ratios = 0;
  std::vector<SampleLoss> samples;
  nn::ParamVector actor_grad;
  nn::ParamVector critic_grad;
};

/// Clipped surrogate with a per-sample clip interval, value regression, entropy
/// bonus and an optional teacher-KL penalty, with exact parameter gradients.
/// The surrogate is averaged over all samples; value, entropy and KL terms over
/// executed samples.
template <class IntervalFn>
LossResult clipped_policy_loss(std::span<const Transition* const> batch, const nn::DenseNet& actor,
                               const nn::DenseNet& critic, const LossWeights& weights, IntervalFn interval) {
  LossResult out;
  out.actor_grad.assign(actor.param_count(), 0.0);
  out.critic_grad.assign(critic.param_count(), 0.0);
  out.samples.resize(batch.size());
  if (batch.empty()) return out;

  std::size_t executed = 0;
  for (const Transition* t : batch) executed += t->executed ? 1 : 0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_exec = executed ? 1.0 / static_cast<double>(executed) : 0.0;

  std::size_t clipped_count = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    SampleLoss& s = out.samples[i];
    const auto fwd = actor.forward(t.obs);
    const auto logits = nn::DenseNet::logits(fwd.cache);
    const auto logp = nn::log_softmax(logits);
    const auto& p = fwd.output;
    const std::size_t k = p.size();
    std::vector<double> dlogits(k, 0.0);

    // Clipped surrogate.
    double log_ratio = logp[t.action] - t.logprob_old;
    if (!std::isfinite(log_ratio)) throw NumericalError("non-finite log-probability ratio");
    if (std::abs(log_ratio) > kMaxLogRatio) {
      log_ratio = std::clamp(log_ratio, -kMaxLogRatio, kMaxLogRatio);
      s.ratio_clamped = true;
      ++out.clamped_ratios;
    }
    const double ratio = std::exp(log_ratio);
    const ClipInterval ci = interval(t);
    const double unclipped = ratio * t.advantage;
    const double clipped = std::clamp(ratio, ci.lower, ci.upper) * t.advantage;
    s.ratio = ratio;
    s.surrogate = std::min(unclipped, clipped);
    s.clipped = clipped < unclipped;
    clipped_count += s.clipped ? 1 : 0;
    if (!s.clipped && !s.ratio_clamped) {
      // d(-surrogate)/dz_j = -A r (1[j=a] - p_j), averaged over the batch.
      const double coeff = -t.advantage * ratio * inv_n;
      for (std::size_t j = 0; j < k; ++j) dlogits[j] += coeff * ((j == static_cast<std::size_t>(t.action)) - p[j]);
    }
    s.total = -s.surrogate;
    out.surrogate += s.surrogate * inv_n;

    double kl_old = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (t.probs_old[j] > 0.0) kl_old += t.probs_old[j] * (std::log(t.probs_old[j]) - logp[j]);
    out.approx_kl += kl_old * inv_n;

    if (t.executed) {
      // Entropy bonus: dH/dz_j = -p_j (log p_j + H).
      double entropy = 0.0;
      for (std::size_t j = 0; j < k; ++j) entropy -= p[j] * logp[j];
      s.entropy = entropy;
      for (std::size_t j = 0; j < k; ++j) dlogits[j] += weights.entropy_beta * p[j] * (logp[j] + entropy) * inv_exec;
      s.total -= weights.entropy_beta * entropy;
      out.entropy += entropy * inv_exec;

      if (t.teacher_probs) {
        const Probs3& q = *t.teacher_probs;
        double kl = 0.0;
        double live_mass = 0.0;  // teacher mass on actions whose student probability is above the floor
        std::vector<bool> live(k);
        for (std::size_t j = 0; j < k; ++j) {
          live[j] = p[j] > kKlProbabilityFloor;
          const double log_student = live[j] ? logp[j] : std::log(kKlProbabilityFloor);
          if (q[j] > 0.0) kl += q[j] * (std::log(q[j]) - log_student);
          if (live[j]) live_mass += q[j];
        }
        s.kl = kl;
        out.teacher_kl += kl * inv_exec;
        if (weights.kl_weight != 0.0) {
          // dKL/dz_j = -sum_{live m} q_m (1[j=m] - p_j)
          for (std::size_t j = 0; j < k; ++j) {
            const double d = -(live[j] ? q[j] : 0.0) + p[j] * live_mass;
            dlogits[j] += weights.kl_weight * d * inv_exec;
          }
          s.total += weights.kl_weight * kl;
          out.loss += weights.kl_weight * kl * inv_exec;
        }
      }

      const auto vfwd = critic.forward(t.obs);
      const double err = vfwd.output[0] - t.return_target;
      s.value_error_sq = err * err;
      s.total += weights.value_coef * err * err;
      out.value_loss += err * err * inv_exec;
      const double dv = 2.0 * weights.value_coef * err * inv_exec;
      critic.backward(vfwd.cache, std::span<const double>(&dv, 1), out.critic_grad);
    }
    actor.backward_logits(fwd.cache, dlogits, out.actor_grad);
  }
  out.loss += -out.surrogate + weights.value_coef * out.value_loss - weights.entropy_beta * out.entropy;
  out.clip_fraction = static_cast<double>(clipped_count) * inv_n;
  if (!std::isfinite(out.loss)) throw NumericalError("non-finite loss");
  return out;
}

inline std::vector<const Transition*> as_pointers(std::span<const Transition> batch) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  return ptrs;
}

struct PpoLossParams {
  double clip_eps = 0.2;
  double entropy_beta = 0.01;
  double value_coef = 0.5;
};

/// Plain clipped objective: interval [1 - eps, 1 + eps] for every sample.
inline LossResult ppo_loss(std::span<const Transition* const> batch, const nn::DenseNet& actor, const nn::DenseNet& critic,
                           const PpoLossParams& hp) {
  const ClipInterval ci{1.0 - hp.clip_eps, 1.0 + hp.clip_eps};
  return clipped_policy_loss(batch, actor, critic, LossWeights{hp.value_coef, hp.entropy_beta, 0.0},
                             [ci](const Transition&) { return ci; });
}

inline LossResult ppo_loss(std::span<const Transition> batch, const nn::DenseNet& actor, const nn::DenseNet& critic,
                           const PpoLossParams& hp) {
  const auto ptrs = as_pointers(batch);
  return ppo_loss(std::span<const Transition* const>(ptrs), actor, critic, hp);
}

}  // namespace s2cd::ppo
