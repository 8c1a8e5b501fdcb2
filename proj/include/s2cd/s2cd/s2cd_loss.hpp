#pragma once

#include <span>
#include <stdexcept>

#include "s2cd/ppo/hyper_params.hpp"
#include "s2cd/ppo/ppo_loss.hpp"
#include "s2cd/s2cd/switching.hpp"

namespace s2cd::engine {

struct AblationFlags {
  bool dual_source = true;
  bool adaptive_clip = true;
  bool kl_constraint = true;
  bool intervention_decay = true;

  static AblationFlags all_off() { return {false, false, false, false}; }
};

struct S2cdHyper {
  ppo::HyperParams ppo = [] {
    ppo::HyperParams h;
    h.total_steps = 60000;
    return h;
  }();
  double psi = 0.2;
  double xi = 0.01;
  SwitchConfig switching;
  AblationFlags flags;
  bool sample_student = true;  // false: greedy student actions during collection

  void validate() const {
    ppo.validate();
    switching.validate();
    if (!(psi >= 0.0 && psi <= ppo.clip_eps)) throw std::invalid_argument("psi must lie in [0, clip_eps]");
    if (!(xi >= 0.0)) throw std::invalid_argument("xi must be non-negative");
  }
};

/// ACPPO+ objective with the weaned KL term. Each sample's clip interval
/// depends on its origin and its stored eps'; the KL term carries weight tau * xi.
inline ppo::LossResult s2cd_loss(std::span<const ppo::Transition* const> batch, const nn::DenseNet& actor,
                                 const nn::DenseNet& critic, const S2cdHyper& hp, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  const double eps = hp.ppo.clip_eps;
  const ppo::LossWeights w{hp.ppo.value_coef, hp.ppo.entropy_beta, hp.flags.kl_constraint ? tau * hp.xi : 0.0};
  if (hp.flags.adaptive_clip)
    return ppo::clipped_policy_loss(batch, actor, critic, w, [eps, tau](const ppo::Transition& t) {
      return clip_interval(t.origin, eps, tau, t.adaptive_eps);
    });
  const ppo::ClipInterval fixed{1.0 - eps, 1.0 + eps};
  return ppo::clipped_policy_loss(batch, actor, critic, w, [fixed](const ppo::Transition&) { return fixed; });
}

inline ppo::LossResult s2cd_loss(std::span<const ppo::Transition> batch, const nn::DenseNet& actor,
                                 const nn::DenseNet& critic, const S2cdHyper& hp, double tau) {
  const auto ptrs = ppo::as_pointers(batch);
  return s2cd_loss(std::span<const ppo::Transition* const>(ptrs), actor, critic, hp, tau);
}

}  // namespace s2cd::engine
