#pragma once

// Shared fixtures for the unit and acceptance suites: finite-difference
// checking and random transition batches.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "s2cd/core/random.hpp"
#include "s2cd/nn/dense_net.hpp"
#include "s2cd/ppo/learner.hpp"
#include "s2cd/ppo/transition.hpp"

namespace s2cd::testing {

/// Relative error |a - b| / max(|a|, |b|, floor); the floor keeps vanishing
/// gradients from turning rounding noise into huge ratios.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose stencil crossed a kink
};

/// Fourth-order central differences (h near eps^(1/5), where truncation and
/// rounding balance) on `count` randomly chosen coordinates of
/// `params`, compared with `analytic`. `regime`, when given, fingerprints the
/// piecewise branch (e.g. which samples are clipped); coordinates whose stencil
/// crosses a branch boundary are redrawn, since the loss is not differentiable
/// there.
inline GradCheck finite_difference_check(std::vector<double>& params, std::span<const double> analytic,
                                         const std::function<double()>& loss, std::size_t count, Rng& rng,
                                         double h = 1e-3, const std::function<std::uint64_t()>& regime = {}) {
  GradCheck r;
  while (r.checked < count) {
    const std::size_t i = uniform_index(rng, params.size());
    const double saved = params[i];
    double f[4];
    const double offsets[4] = {-2 * h, -h, h, 2 * h};
    bool smooth = true;
    const std::uint64_t base = regime ? regime() : 0;
    for (int k = 0; k < 4; ++k) {
      params[i] = saved + offsets[k];
      f[k] = loss();
      if (regime && regime() != base) smooth = false;
    }
    params[i] = saved;
    if (!smooth) {
      ++r.skipped;
      if (r.skipped > 20 * count) break;
      continue;
    }
    const double fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h);
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic[i], fd));
    ++r.checked;
  }
  return r;
}

/// A batch with normalized-looking advantages, behaviour log-probs perturbed
/// around the current policy (so some samples clip), both origins, and
/// teacher distributions on every sample.
inline std::vector<ppo::Transition> random_batch(const nn::DenseNet& actor, std::size_t n, Rng& rng,
                                                 double logp_noise = 0.3) {
  std::vector<ppo::Transition> batch(n);
  const std::size_t d = actor.spec().input_dim;
  for (auto& t : batch) {
    t.obs.resize(d);
    for (auto& x : t.obs) x = uniform(rng, 0.0, 1.0);
    const auto p = actor.evaluate(t.obs);
    t.action = static_cast<int>(uniform_index(rng, 3));
    t.logprob_old = std::log(p[t.action]) + uniform(rng, -logp_noise, logp_noise);
    t.probs_old = ppo::to_probs3(p);
    t.advantage = standard_normal(rng);
    t.return_target = standard_normal(rng);
    t.value = standard_normal(rng);
    t.origin = uniform(rng, 0, 1) < 0.5 ? ppo::Origin::Student : ppo::Origin::Teacher;
    t.executed = t.origin == ppo::Origin::Student || uniform(rng, 0, 1) < 0.5;
    double a = uniform(rng, 0.05, 1), b = uniform(rng, 0.05, 1), c = uniform(rng, 0.05, 1);
    const double s = a + b + c;
    t.teacher_probs = ppo::Probs3{a / s, b / s, c / s};
    t.adaptive_eps = uniform(rng, 0.0, 0.2);
  }
  return batch;
}

inline nn::NetSpec small_spec(std::size_t in, std::size_t out, nn::Head head) {
  return {in, {8, 6}, out, head};
}

/// Random parameters with a wider spread than the default initialization so
/// the policy is far from uniform.
inline nn::DenseNet random_net(const nn::NetSpec& spec, Rng& rng, double scale = 0.7) {
  nn::DenseNet net(spec);
  for (auto& p : net.params()) p = scale * standard_normal(rng);
  return net;
}

}  // namespace s2cd::testing
