#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "s2cd/ppo/ppo_loss.hpp"

namespace s2cd::ppo {

struct HyperParams {
  double gamma = 0.96;
  double gae_lambda = 0.98;
  double clip_eps = 0.2;
  double entropy_beta = 0.01;
  std::size_t minibatch = 64;
  std::size_t update_epochs = 8;
  double value_coef = 0.5;
  std::size_t steps_per_phase = 5000;
  std::size_t total_steps = 100000;
  double learning_rate = 0.0005;
  bool lr_decay = true;
  double weight_decay = 0.01;
  double max_grad_norm = 0.5;
  std::vector<std::size_t> hidden{64, 64};

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("clip_eps must lie in (0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0, 1]");
    if (minibatch == 0 || update_epochs == 0 || steps_per_phase == 0 || total_steps == 0)
      throw std::invalid_argument("batch sizes and budgets must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (entropy_beta < 0.0 || value_coef < 0.0 || weight_decay < 0.0)
      throw std::invalid_argument("loss weights must be non-negative");
  }

  PpoLossParams loss_params() const { return {clip_eps, entropy_beta, value_coef}; }
};

}  // namespace s2cd::ppo
