#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cd/core/random.hpp"
#include "s2cd/theory/tabular_mdp.hpp"

namespace s2cd::theory {

inline constexpr double kTheoremTolerance = 1e-9;
inline constexpr double kKlFloor = 1e-12;

struct MixedPolicy {
  PolicyTable policy;
  std::vector<bool> intervene;  // T(s)
  double omega = 0.0;           // E_{s ~ d_mix}[T(s)]
  std::vector<double> visitation;
};

/// Per state, the teacher acts iff its policy's expected teacher-Q exceeds the
/// student's by more than `tolerance`:
///   sum_a pi_t(a|s) Q_t(s,a) - sum_a pi_s(a|s) Q_t(s,a) > tolerance.
/// For deterministic policies this is Q_t(s, a_t) - Q_t(s, a_s).
inline MixedPolicy build_mixed_policy(const PolicyTable& teacher, const PolicyTable& student, const TabularMdp& mdp,
                                      double tolerance) {
  teacher.validate(mdp);
  student.validate(mdp);
  const auto Q = q_from_values(mdp, exact_policy_value(mdp, teacher));
  MixedPolicy m;
  m.policy = PolicyTable(mdp.n_states, mdp.n_actions);
  m.intervene.assign(mdp.n_states, false);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double qt = 0.0, qs = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      qt += teacher(s, a) * Q[s * mdp.n_actions + a];
      qs += student(s, a) * Q[s * mdp.n_actions + a];
    }
    m.intervene[s] = qt - qs > tolerance;
    const PolicyTable& src = m.intervene[s] ? teacher : student;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) m.policy(s, a) = src(s, a);
  }
  m.visitation = discounted_visitation(mdp, m.policy);
  for (std::size_t s = 0; s < mdp.n_states; ++s) m.omega += m.intervene[s] ? m.visitation[s] : 0.0;
  m.omega = std::clamp(m.omega, 0.0, 1.0);
  return m;
}

inline double floored_kl(const PolicyTable& p, const PolicyTable& q, std::size_t s) {
  double kl = 0.0;
  for (std::size_t a = 0; a < p.n_actions; ++a)
    if (p(s, a) > 0.0) kl += p(s, a) * (std::log(p(s, a)) - std::log(std::max(q(s, a), kKlFloor)));
  return std::max(kl, 0.0);
}

struct Theorem4Report {
  double j_teacher = 0.0;
  double j_mix = 0.0;
  double margin = 0.0;            // J_mix - J_teacher
  double min_state_margin = 0.0;  // min_s V_mix(s) - V_teacher(s)
  double omega = 0.0;
  bool holds = false;
};

inline Theorem4Report check_theorem4(const TabularMdp& mdp, const PolicyTable& teacher, const PolicyTable& student,
                                     double tolerance = 0.0) {
  const auto mixed = build_mixed_policy(teacher, student, mdp, tolerance);
  const auto Vt = exact_policy_value(mdp, teacher);
  const auto Vm = exact_policy_value(mdp, mixed.policy);
  Theorem4Report r;
  r.j_teacher = expected_start_value(mdp, Vt);
  r.j_mix = expected_start_value(mdp, Vm);
  r.margin = r.j_mix - r.j_teacher;
  r.min_state_margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < mdp.n_states; ++s) r.min_state_margin = std::min(r.min_state_margin, Vm[s] - Vt[s]);
  r.omega = mixed.omega;
  r.holds = r.margin >= -kTheoremTolerance;
  return r;
}

struct Theorem3Report {
  double j_teacher = 0.0;
  double j_mix = 0.0;
  double lhs = 0.0;  // |J_mix - J_teacher|
  double omega = 0.0;
  double r_max = 0.0;
  double expected_sqrt_kl = 0.0;  // E_{d_mix} sqrt(KL(teacher || student))
  double bound_rhs = 0.0;
  double slack = 0.0;
  double teacher_entropy = 0.0;  // H: d_mix-weighted teacher entropy
  double kappa = 0.0;            // H - E_{d_mix} KL
  bool holds = false;
};

/// |J_mix - J_t| <= sqrt(2) (1 - omega) R_max / (1 - gamma)^2 * E_{d_mix}[sqrt(KL(pi_t || pi_s))].
inline Theorem3Report check_theorem3(const TabularMdp& mdp, const PolicyTable& teacher, const PolicyTable& student,
                                     double tolerance = 0.0) {
  const auto mixed = build_mixed_policy(teacher, student, mdp, tolerance);
  Theorem3Report r;
  r.j_teacher = expected_start_value(mdp, exact_policy_value(mdp, teacher));
  r.j_mix = expected_start_value(mdp, exact_policy_value(mdp, mixed.policy));
  r.lhs = std::abs(r.j_mix - r.j_teacher);
  r.omega = mixed.omega;
  r.r_max = mdp.r_max();
  double mean_kl = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const double kl = floored_kl(teacher, student, s);
    r.expected_sqrt_kl += mixed.visitation[s] * std::sqrt(kl);
    mean_kl += mixed.visitation[s] * kl;
    double h = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      if (teacher(s, a) > 0.0) h -= teacher(s, a) * std::log(teacher(s, a));
    r.teacher_entropy += mixed.visitation[s] * h;
  }
  r.kappa = r.teacher_entropy - mean_kl;
  const double horizon = 1.0 - mdp.gamma;
  r.bound_rhs = std::sqrt(2.0) * (1.0 - r.omega) * r.r_max / (horizon * horizon) * r.expected_sqrt_kl;
  r.slack = r.bound_rhs - r.lhs;
  r.holds = r.slack >= 0.0;
  return r;
}

struct SweepConfig {
  std::size_t instances = 100;
  std::size_t min_states = 2;
  std::size_t max_states = 20;
  std::size_t min_actions = 2;
  std::size_t max_actions = 4;
  double gamma = 0.96;
  double tolerance = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (instances == 0) throw std::invalid_argument("sweep needs at least one instance");
    if (min_states < 1 || max_states < min_states || max_states > 20)
      throw std::invalid_argument("state counts must satisfy 1 <= min <= max <= 20");
    if (min_actions < 1 || max_actions < min_actions || max_actions > 4)
      throw std::invalid_argument("action counts must satisfy 1 <= min <= max <= 4");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  }
};

enum class PairKind { RandomPair, OptimalVsUniform, SharpTeacher };

inline const char* to_string(PairKind k) {
  switch (k) {
    case PairKind::RandomPair: return "random_pair";
    case PairKind::OptimalVsUniform: return "optimal_vs_uniform";
    case PairKind::SharpTeacher: return "sharp_teacher";
  }
  return "random_pair";
}

struct Instance {
  TabularMdp mdp;
  PolicyTable teacher;
  PolicyTable student;
  PairKind kind = PairKind::RandomPair;
};

/// Instance i draws from its own derived stream; the pair kind cycles through
/// random/random, optimal/uniform and a sharpened random teacher.
inline Instance make_instance(const SweepConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  const std::size_t ns = cfg.min_states + uniform_index(rng, cfg.max_states - cfg.min_states + 1);
  const std::size_t na = cfg.min_actions + uniform_index(rng, cfg.max_actions - cfg.min_actions + 1);
  Instance inst;
  inst.mdp = random_mdp(rng, ns, na, cfg.gamma);
  inst.kind = static_cast<PairKind>(index % 3);
  switch (inst.kind) {
    case PairKind::RandomPair:
      inst.teacher = random_policy(rng, ns, na);
      inst.student = random_policy(rng, ns, na);
      break;
    case PairKind::OptimalVsUniform:
      inst.teacher = greedy_optimal_policy(inst.mdp);
      inst.student = uniform_policy(ns, na);
      break;
    case PairKind::SharpTeacher: {
      // Mix the optimal policy with a random one so the teacher is good but stochastic.
      const auto opt = greedy_optimal_policy(inst.mdp);
      const auto noise = random_policy(rng, ns, na);
      inst.teacher = PolicyTable(ns, na);
      for (std::size_t i = 0; i < inst.teacher.probs.size(); ++i)
        inst.teacher.probs[i] = 0.8 * opt.probs[i] + 0.2 * noise.probs[i];
      inst.student = random_policy(rng, ns, na);
      break;
    }
  }
  return inst;
}

struct SweepReport {
  nlohmann::json json;
  std::size_t theorem3_violations = 0;
  std::size_t theorem4_violations = 0;
  double min_theorem4_margin = std::numeric_limits<double>::infinity();
  double min_theorem3_slack = std::numeric_limits<double>::infinity();
};

inline SweepReport run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepReport rep;
  rep.json["config"] = {{"instances", cfg.instances}, {"min_states", cfg.min_states}, {"max_states", cfg.max_states},
                        {"min_actions", cfg.min_actions}, {"max_actions", cfg.max_actions}, {"gamma", cfg.gamma},
                        {"tolerance", cfg.tolerance}, {"seed", cfg.seed}};
  rep.json["instances"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const auto inst = make_instance(cfg, i);
    const auto t4 = check_theorem4(inst.mdp, inst.teacher, inst.student, cfg.tolerance);
    const auto t3 = check_theorem3(inst.mdp, inst.teacher, inst.student, cfg.tolerance);
    rep.theorem4_violations += t4.holds ? 0 : 1;
    rep.theorem3_violations += t3.holds ? 0 : 1;
    rep.min_theorem4_margin = std::min(rep.min_theorem4_margin, t4.margin);
    rep.min_theorem3_slack = std::min(rep.min_theorem3_slack, t3.slack);
    rep.json["instances"].push_back({{"index", i},
                                     {"kind", to_string(inst.kind)},
                                     {"n_states", inst.mdp.n_states},
                                     {"n_actions", inst.mdp.n_actions},
                                     {"J_teacher", t3.j_teacher},
                                     {"J_mix", t3.j_mix},
                                     {"omega", t3.omega},
                                     {"bound_rhs", t3.bound_rhs},
                                     {"slack", t3.slack},
                                     {"H", t3.teacher_entropy},
                                     {"kappa", t3.kappa},
                                     {"theorem4_margin", t4.margin}});
  }
  rep.json["summary"] = {{"theorem3_violations", rep.theorem3_violations},
                         {"theorem4_violations", rep.theorem4_violations},
                         {"min_theorem3_slack", rep.min_theorem3_slack},
                         {"min_theorem4_margin", rep.min_theorem4_margin}};
  return rep;
}

}  // namespace s2cd::theory
