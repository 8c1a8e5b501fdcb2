#pragma once

#include <array>
#include <optional>
#include <vector>

namespace s2cd::ppo {

enum class Origin { Student, Teacher };

using Probs3 = std::array<double, 3>;

struct Transition {
  std::vector<double> obs;  // policy input (augmented under S2CD)
  int action = 0;
  double logprob_old = 0.0;
  Probs3 probs_old{};  // behaviour distribution of the learner at collection time
  double reward = 0.0;
  double value = 0.0;  // critic estimate at collection time
  bool done = false;
  Origin origin = Origin::Student;
  std::optional<Probs3> teacher_probs;
  double adaptive_eps = 0.0;  // per-sample adaptive clip factor, fixed at collection
  // Executed transitions carry the value, entropy and KL terms; teacher-predicted
  // companions contribute only to the surrogate.
  bool executed = true;
  double advantage = 0.0;
  double return_target = 0.0;
};

}  // namespace s2cd::ppo
