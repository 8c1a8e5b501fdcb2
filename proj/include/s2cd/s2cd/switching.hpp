#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s2cd/ppo/ppo_loss.hpp"
#include "s2cd/ppo/transition.hpp"

namespace s2cd::engine {

struct SwitchConfig {
  double tolerance_eps = 0.5;
  double q1 = 3.0;
  double q2 = 10.0;

  void validate() const {
    if (!(tolerance_eps > 0.0)) throw std::invalid_argument("tolerance_eps must be positive");
    if (!(q1 > 0.0)) throw std::invalid_argument("q1 must be positive");
  }
};

/// Weaning schedule: tau = 1 / (1 + exp(n_e/q1 - q2)); constant 1 when decay is disabled.
inline double decay_tau(double episodes, const SwitchConfig& cfg, bool decay_enabled = true) {
  if (episodes < 0.0) throw std::invalid_argument("episode count must be non-negative");
  if (!decay_enabled) return 1.0;
  return 1.0 / (1.0 + std::exp(episodes / cfg.q1 - cfg.q2));
}

inline double switch_threshold(double tau, const SwitchConfig& cfg) { return (1.0 - tau) * cfg.tolerance_eps; }

enum class Chosen { Student, Teacher };

struct SwitchDecision {
  Chosen chosen = Chosen::Student;
  bool intervened = false;
};

/// The teacher takes over iff its action's Q exceeds the student's by more than (1 - tau) * eps.
inline SwitchDecision switch_action(double q_teacher, double q_student, double tau, const SwitchConfig& cfg) {
  const bool teacher = q_teacher - q_student > switch_threshold(tau, cfg);
  return {teacher ? Chosen::Teacher : Chosen::Student, teacher};
}

/// eps' = psi * ((p_student - p_teacher) + 1) / 2, both probabilities under the student policy.
inline double adaptive_epsilon(double p_student, double p_teacher, double psi) {
  return std::clamp(psi * ((p_student - p_teacher) + 1.0) / 2.0, 0.0, psi);
}

/// D_KL(teacher || student) with the student side floored before the log.
inline double kl_penalty(const ppo::Probs3& teacher, const ppo::Probs3& student) {
  double kl = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    if (teacher[i] > 0.0)
      kl += teacher[i] * (std::log(teacher[i]) - std::log(std::max(student[i], ppo::kKlProbabilityFloor)));
  return std::max(kl, 0.0);
}

/// Student-origin samples: [1 - (eps + s), 1 + (eps - s)];
/// teacher-origin samples: [1 - (eps - s), 1 + (eps + s)]; with s = tau * eps'.
inline ppo::ClipInterval clip_interval(ppo::Origin origin, double eps, double tau, double eps_prime) {
  const double s = tau * eps_prime;
  if (origin == ppo::Origin::Student) return {1.0 - (eps + s), 1.0 + (eps - s)};
  return {1.0 - (eps - s), 1.0 + (eps + s)};
}

}  // namespace s2cd::engine
