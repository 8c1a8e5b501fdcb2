#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace s2cd::ppo {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation over one contiguous rollout.
/// `values[t]` is V(s_t); V(s_{T}) after the last step is `bootstrap_value`.
/// A done flag at t cuts both the bootstrap and the recursion.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             const std::vector<bool>& dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("GAE inputs differ in length");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_advantage = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_advantage = delta + gamma * lambda * live * next_advantage;
    out.advantages[t] = next_advantage;
    out.returns[t] = next_advantage + values[t];
  }
  return out;
}

/// Zero-mean, unit-variance rescaling in place.
inline void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(advantages.size());
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (auto& a : advantages) a = (a - mean) * scale;
}

}  // namespace s2cd::ppo
