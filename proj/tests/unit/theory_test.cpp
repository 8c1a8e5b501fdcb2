#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "s2cd/theory/tabular_mdp.hpp"
#include "s2cd/theory/theorems.hpp"

using namespace s2cd;
using namespace s2cd::theory;

namespace {

// V = (I - gamma P_pi)^{-1} r_pi by LU decomposition.
Eigen::VectorXd dense_value(const TabularMdp& m, const PolicyTable& pi) {
  const auto n = static_cast<Eigen::Index>(m.n_states);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      b[s] += pi(s, a) * m.reward(s, a);
      for (std::size_t s2 = 0; s2 < m.n_states; ++s2) A(s, s2) -= m.gamma * pi(s, a) * m.p(s, a, s2);
    }
  return A.partialPivLu().solve(b);
}

// d = (1 - gamma) (I - gamma P_pi^T)^{-1} mu0.
Eigen::VectorXd dense_visitation(const TabularMdp& m, const PolicyTable& pi) {
  const auto n = static_cast<Eigen::Index>(m.n_states);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a)
      for (std::size_t s2 = 0; s2 < m.n_states; ++s2) P(s, s2) += pi(s, a) * m.p(s, a, s2);
  Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(m.mu0.data(), n);
  return (1 - m.gamma) * (Eigen::MatrixXd::Identity(n, n) - m.gamma * P.transpose()).partialPivLu().solve(mu);
}

TabularMdp single_state(double reward, double gamma) {
  TabularMdp m;
  m.n_states = 1;
  m.n_actions = 1;
  m.P = {1.0};
  m.r = {reward};
  m.gamma = gamma;
  m.mu0 = {1.0};
  return m;
}

PolicyTable blend(const PolicyTable& a, const PolicyTable& b, double w) {
  PolicyTable out = a;
  for (std::size_t i = 0; i < out.probs.size(); ++i) out.probs[i] = (1 - w) * a.probs[i] + w * b.probs[i];
  return out;
}

}  // namespace

TEST(Tabular, SingleStateGeometricSeries) {
  const auto m = single_state(1.0, 0.96);
  const auto V = exact_policy_value(m, uniform_policy(1, 1));
  EXPECT_NEAR(V[0], 25.0, 1e-9);
}

TEST(Tabular, ZeroRewardsGiveZeroValue) {
  Rng rng(1);
  auto m = random_mdp(rng, 6, 3, 0.9);
  std::fill(m.r.begin(), m.r.end(), 0.0);
  for (double v : exact_policy_value(m, random_policy(rng, 6, 3))) EXPECT_EQ(v, 0.0);
}

TEST(Tabular, ValuesMatchDenseLinearSolve) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ns = 1 + uniform_index(rng, 20), na = 1 + uniform_index(rng, 4);
    const auto m = random_mdp(rng, ns, na, 0.96);
    const auto pi = random_policy(rng, ns, na);
    const auto V = exact_policy_value(m, pi);
    const auto ref = dense_value(m, pi);
    for (std::size_t s = 0; s < ns; ++s) EXPECT_NEAR(V[s], ref[s], 1e-10);
    const auto d = discounted_visitation(m, pi);
    const auto dref = dense_visitation(m, pi);
    double total = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      EXPECT_NEAR(d[s], dref[s], 1e-10);
      total += d[s];
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
    // (1 - gamma) J = sum_s d(s) r_pi(s)
    double lhs = 0;
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a) lhs += d[s] * pi(s, a) * m.reward(s, a);
    EXPECT_NEAR(lhs, (1 - m.gamma) * expected_start_value(m, V), 1e-10);
  }
}

TEST(Tabular, GreedyPolicyDominatesRandomOnes) {
  Rng rng(3);
  const auto m = random_mdp(rng, 8, 3, 0.9);
  const auto Vstar = exact_policy_value(m, greedy_optimal_policy(m));
  for (int i = 0; i < 30; ++i) {
    const auto V = exact_policy_value(m, random_policy(rng, 8, 3));
    for (std::size_t s = 0; s < 8; ++s) EXPECT_GE(Vstar[s], V[s] - 1e-9);
  }
}

TEST(Tabular, RejectsMalformedTables) {
  auto m = single_state(1.0, 0.9);
  m.P = {0.5};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = single_state(1.0, 1.0);
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Mixed, IdenticalPoliciesNeverIntervene) {
  Rng rng(4);
  const auto m = random_mdp(rng, 7, 3, 0.96);
  const auto pi = random_policy(rng, 7, 3);
  const auto mix = build_mixed_policy(pi, pi, m, 0.0);
  EXPECT_EQ(mix.omega, 0.0);
  const auto t4 = check_theorem4(m, pi, pi);
  EXPECT_NEAR(t4.margin, 0.0, 1e-12);
  const auto t3 = check_theorem3(m, pi, pi);
  EXPECT_NEAR(t3.lhs, 0.0, 1e-12);
  EXPECT_NEAR(t3.bound_rhs, 0.0, 1e-5);  // sqrt of a floored, rounding-level KL
  EXPECT_TRUE(t3.holds);
}

TEST(Mixed, UnboundedTrustReplaysTheTeacher) {
  Rng rng(5);
  const auto m = random_mdp(rng, 6, 3, 0.96);
  const auto t = greedy_optimal_policy(m);
  const auto s = uniform_policy(6, 3);
  const auto mix = build_mixed_policy(t, s, m, -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(mix.omega, 1.0, 1e-12);
  EXPECT_EQ(mix.policy.probs, t.probs);
  const auto never = build_mixed_policy(t, s, m, std::numeric_limits<double>::infinity());
  EXPECT_EQ(never.omega, 0.0);
  EXPECT_EQ(never.policy.probs, s.probs);
}

TEST(Mixed, InterventionRuleAndOmegaFromDefinition) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_mdp(rng, 5, 3, 0.9);
    const auto t = random_policy(rng, 5, 3), s = random_policy(rng, 5, 3);
    const auto mix = build_mixed_policy(t, s, m, 0.0);
    const auto Vt = dense_value(m, t);
    double omega = 0;
    const auto d = dense_visitation(m, mix.policy);
    for (std::size_t st = 0; st < 5; ++st) {
      double gap = 0;
      for (std::size_t a = 0; a < 3; ++a) {
        double q = m.reward(st, a);
        for (std::size_t s2 = 0; s2 < 5; ++s2) q += m.gamma * m.p(st, a, s2) * Vt[s2];
        gap += (t(st, a) - s(st, a)) * q;
      }
      EXPECT_EQ(mix.intervene[st], gap > 0.0);
      if (mix.intervene[st]) omega += d[st];
    }
    EXPECT_NEAR(mix.omega, omega, 1e-10);
    EXPECT_GE(mix.omega, 0.0);
    EXPECT_LE(mix.omega, 1.0);
  }
}

TEST(Theorem4, MixedPolicyNeverWorseThanTeacher) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ns = 2 + uniform_index(rng, 12), na = 2 + uniform_index(rng, 3);
    const auto m = random_mdp(rng, ns, na, 0.96);
    const auto r = check_theorem4(m, random_policy(rng, ns, na), random_policy(rng, ns, na));
    EXPECT_TRUE(r.holds);
    EXPECT_GE(r.min_state_margin, -1e-9);
  }
}

TEST(Theorem4, DegenerateSingleStateSingleAction) {
  const auto m = single_state(0.7, 0.96);
  const auto pi = uniform_policy(1, 1);
  const auto r = check_theorem4(m, pi, pi);
  EXPECT_NEAR(r.margin, 0.0, 1e-12);
  EXPECT_TRUE(r.holds);
}

TEST(Theorem3, BoundHoldsAndVanishesWithFullIntervention) {
  Rng rng(8);
  const auto m = random_mdp(rng, 6, 3, 0.96);
  const auto t = random_policy(rng, 6, 3), s = random_policy(rng, 6, 3);
  const auto r = check_theorem3(m, t, s);
  EXPECT_TRUE(r.holds);
  const double expect = std::sqrt(2.0) * (1 - r.omega) * r.r_max / std::pow(1 - m.gamma, 2) * r.expected_sqrt_kl;
  EXPECT_NEAR(r.bound_rhs, expect, 1e-12 * std::max(1.0, expect));
  // Always handing control to the teacher closes both sides of the inequality.
  const auto full = check_theorem3(m, t, s, -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(full.omega, 1.0, 1e-12);
  EXPECT_NEAR(full.lhs, 0.0, 1e-10);
  EXPECT_NEAR(full.bound_rhs, 0.0, 1e-8);
}

TEST(Theorem3, RightHandSideShrinksAsStudentApproachesTeacher) {
  Rng rng(9);
  const auto m = random_mdp(rng, 6, 3, 0.96);
  const auto t = random_policy(rng, 6, 3), s0 = random_policy(rng, 6, 3);
  // With no intervention the bound depends on the student only through the KL.
  double prev = std::numeric_limits<double>::infinity();
  for (double w : {0.0, 0.25, 0.5, 0.75, 0.95}) {
    const auto r = check_theorem3(m, t, blend(s0, t, w), std::numeric_limits<double>::infinity());
    EXPECT_EQ(r.omega, 0.0);
    EXPECT_TRUE(r.holds);
    EXPECT_LT(r.expected_sqrt_kl, prev + 1e-12);
    prev = r.expected_sqrt_kl;
  }
}

TEST(Sweep, NoViolationsAndDeterministicReport) {
  SweepConfig cfg;
  cfg.instances = 300;
  cfg.seed = 17;
  const auto a = run_sweep(cfg);
  EXPECT_EQ(a.theorem3_violations, 0u);
  EXPECT_EQ(a.theorem4_violations, 0u);
  EXPECT_GE(a.min_theorem4_margin, -kTheoremTolerance);
  EXPECT_EQ(a.json.dump(), run_sweep(cfg).json.dump());
  EXPECT_EQ(a.json["instances"].size(), 300u);
  cfg.max_states = 21;
  EXPECT_THROW(run_sweep(cfg), std::invalid_argument);
}

TEST(Theorem4, MyopicCaseTakesTheBetterImmediateReward) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_mdp(rng, 6, 3, 0.0);
    const auto t = random_policy(rng, 6, 3), s = random_policy(rng, 6, 3);
    const auto mix = build_mixed_policy(t, s, m, 0.0);
    for (std::size_t st = 0; st < 6; ++st) {
      double rt = 0, rs = 0, rm = 0;
      for (std::size_t a = 0; a < 3; ++a) {
        rt += t(st, a) * m.reward(st, a);
        rs += s(st, a) * m.reward(st, a);
        rm += mix.policy(st, a) * m.reward(st, a);
      }
      EXPECT_NEAR(rm, std::max(rt, rs), 1e-15);
    }
  }
}
