#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "s2cd/core/random.hpp"

namespace s2cd::theory {

/// Finite MDP with dense tables. P is indexed [s][a][s'], r by [s][a].
struct TabularMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> P;
  std::vector<double> r;
  double gamma = 0.96;
  std::vector<double> mu0;

  double p(std::size_t s, std::size_t a, std::size_t s2) const { return P[(s * n_actions + a) * n_states + s2]; }
  double& p(std::size_t s, std::size_t a, std::size_t s2) { return P[(s * n_actions + a) * n_states + s2]; }
  double reward(std::size_t s, std::size_t a) const { return r[s * n_actions + a]; }
  double& reward(std::size_t s, std::size_t a) { return r[s * n_actions + a]; }

  double r_max() const {
    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
  }

  void validate() const {
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MDP needs at least one state and action");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (P.size() != n_states * n_actions * n_states || r.size() != n_states * n_actions || mu0.size() != n_states)
      throw std::invalid_argument("MDP tables have inconsistent sizes");
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a) {
        double total = 0.0;
        for (std::size_t s2 = 0; s2 < n_states; ++s2) {
          if (p(s, a, s2) < 0.0) throw std::invalid_argument("negative transition probability");
          total += p(s, a, s2);
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("transition row does not sum to 1");
      }
    double total = 0.0;
    for (double x : mu0) total += x;
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("initial distribution does not sum to 1");
  }
};

/// Row-stochastic pi(a|s), stored [s][a].
struct PolicyTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;

  PolicyTable() = default;
  PolicyTable(std::size_t ns, std::size_t na) : n_states(ns), n_actions(na), probs(ns * na, 0.0) {}

  double operator()(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }
  double& operator()(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }

  void validate(const TabularMdp& mdp) const {
    if (n_states != mdp.n_states || n_actions != mdp.n_actions || probs.size() != n_states * n_actions)
      throw std::invalid_argument("policy shape does not match the MDP");
    for (std::size_t s = 0; s < n_states; ++s) {
      double total = 0.0;
      for (std::size_t a = 0; a < n_actions; ++a) {
        if ((*this)(s, a) < 0.0) throw std::invalid_argument("negative policy probability");
        total += (*this)(s, a);
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("policy row is not a distribution");
    }
  }
};

/// Dirichlet(1, ..., 1) sample via normalized exponentials.
inline std::vector<double> dirichlet_ones(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  double total = 0.0;
  for (auto& v : x) {
    double u = uniform(rng, 0.0, 1.0);
    while (u <= 0.0) u = uniform(rng, 0.0, 1.0);
    total += (v = -std::log(u));
  }
  for (auto& v : x) v /= total;
  // Renormalize the tail so the row sums to 1 to the last bit we can manage.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s += x[i];
  x[n - 1] = std::max(0.0, 1.0 - s);
  return x;
}

inline TabularMdp random_mdp(Rng& rng, std::size_t n_states, std::size_t n_actions, double gamma) {
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.P.resize(n_states * n_actions * n_states);
  m.r.resize(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a) {
      const auto row = dirichlet_ones(rng, n_states);
      for (std::size_t s2 = 0; s2 < n_states; ++s2) m.p(s, a, s2) = row[s2];
      m.reward(s, a) = uniform(rng, -1.0, 1.0);
    }
  m.mu0 = dirichlet_ones(rng, n_states);
  m.validate();
  return m;
}

inline PolicyTable random_policy(Rng& rng, std::size_t n_states, std::size_t n_actions) {
  PolicyTable pi(n_states, n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    const auto row = dirichlet_ones(rng, n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) pi(s, a) = row[a];
  }
  return pi;
}

inline PolicyTable uniform_policy(std::size_t n_states, std::size_t n_actions) {
  PolicyTable pi(n_states, n_actions);
  for (auto& p : pi.probs) p = 1.0 / static_cast<double>(n_actions);
  return pi;
}

inline constexpr double kValueResidual = 1e-12;

/// Iterative policy evaluation of V = r_pi + gamma P_pi V until the sup-norm
/// residual drops below 1e-12.
inline std::vector<double> exact_policy_value(const TabularMdp& mdp, const PolicyTable& pi) {
  mdp.validate();
  pi.validate(mdp);
  const std::size_t n = mdp.n_states;
  std::vector<double> r_pi(n, 0.0), P_pi(n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const double w = pi(s, a);
      if (w == 0.0) continue;
      r_pi[s] += w * mdp.reward(s, a);
      for (std::size_t s2 = 0; s2 < n; ++s2) P_pi[s * n + s2] += w * mdp.p(s, a, s2);
    }
  std::vector<double> V(n, 0.0), next(n);
  for (int iter = 0; iter < 1000000; ++iter) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double v = r_pi[s];
      for (std::size_t s2 = 0; s2 < n; ++s2) v += mdp.gamma * P_pi[s * n + s2] * V[s2];
      next[s] = v;
      residual = std::max(residual, std::abs(v - V[s]));
    }
    V.swap(next);
    if (residual < kValueResidual) return V;
  }
  throw std::runtime_error("policy evaluation did not converge");
}

/// Q(s, a) = r(s, a) + gamma * sum_s' P(s'|s, a) V(s').
inline std::vector<double> q_from_values(const TabularMdp& mdp, const std::vector<double>& V) {
  std::vector<double> Q(mdp.n_states * mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double q = mdp.reward(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) q += mdp.gamma * mdp.p(s, a, s2) * V[s2];
      Q[s * mdp.n_actions + a] = q;
    }
  return Q;
}

/// Deterministic optimal policy by value iteration (ties to the lowest action).
inline PolicyTable greedy_optimal_policy(const TabularMdp& mdp) {
  std::vector<double> V(mdp.n_states, 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    const auto Q = q_from_values(mdp, V);
    double residual = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.n_actions; ++a) best = std::max(best, Q[s * mdp.n_actions + a]);
      residual = std::max(residual, std::abs(best - V[s]));
      V[s] = best;
    }
    if (residual < kValueResidual) break;
  }
  const auto Q = q_from_values(mdp, V);
  PolicyTable pi(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < mdp.n_actions; ++a)
      if (Q[s * mdp.n_actions + a] > Q[s * mdp.n_actions + best]) best = a;
    pi(s, best) = 1.0;
  }
  return pi;
}

/// Normalized discounted visitation d = (1 - gamma) mu0^T (I - gamma P_pi)^{-1}.
inline std::vector<double> discounted_visitation(const TabularMdp& mdp, const PolicyTable& pi) {
  const std::size_t n = mdp.n_states;
  std::vector<double> P_pi(n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t s2 = 0; s2 < n; ++s2) P_pi[s * n + s2] += pi(s, a) * mdp.p(s, a, s2);
  std::vector<double> d(n), next(n);
  for (std::size_t s = 0; s < n; ++s) d[s] = (1.0 - mdp.gamma) * mdp.mu0[s];
  for (int iter = 0; iter < 1000000; ++iter) {
    double residual = 0.0;
    for (std::size_t s2 = 0; s2 < n; ++s2) {
      double v = (1.0 - mdp.gamma) * mdp.mu0[s2];
      for (std::size_t s = 0; s < n; ++s) v += mdp.gamma * d[s] * P_pi[s * n + s2];
      next[s2] = v;
      residual = std::max(residual, std::abs(v - d[s2]));
    }
    d.swap(next);
    if (residual < 1e-15) break;
  }
  return d;
}

inline double expected_start_value(const TabularMdp& mdp, const std::vector<double>& V) {
  double j = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) j += mdp.mu0[s] * V[s];
  return j;
}

}  // namespace s2cd::theory
