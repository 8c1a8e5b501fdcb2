#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "s2cd/core/error.hpp"

namespace s2cd::nn {

struct OptimState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;
  double base_lr = 0.0005;
  double weight_decay = 0.01;
  bool lr_decay = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimState for_params(std::size_t n, double base_lr = 0.0005, double weight_decay = 0.01, bool lr_decay = true) {
    OptimState s;
    s.first_moment.assign(n, 0.0);
    s.second_moment.assign(n, 0.0);
    s.base_lr = base_lr;
    s.weight_decay = weight_decay;
    s.lr_decay = lr_decay;
    return s;
  }

  double effective_lr(double progress) const { return lr_decay ? base_lr * (1.0 - progress) : base_lr; }
};

/// Decoupled-weight-decay Adam update with a linearly decaying learning rate.
/// `progress` is the fraction of the training budget already consumed. A
/// non-finite gradient aborts before any state is modified.
inline void adamw_step(OptimState& state, std::span<double> params, std::span<const double> grads, double progress) {
  if (progress < 0.0 || progress > 1.0) throw std::invalid_argument("progress must lie in [0, 1]");
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw std::invalid_argument("optimizer state, parameters and gradients differ in length");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw NumericalError("non-finite gradient at index " + std::to_string(i));

  ++state.step;
  const double lr = state.effective_lr(progress);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    if (lr == 0.0) continue;
    const double m_hat = state.first_moment[i] / c1;
    const double v_hat = state.second_moment[i] / c2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + state.epsilon) + state.weight_decay * params[i]);
  }
}

/// Rescales `grads` in place so its L2 norm is at most `max_norm`; returns the
/// original norm.
inline double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace s2cd::nn
