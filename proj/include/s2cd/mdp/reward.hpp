#pragma once

#include <algorithm>
#include <stdexcept>

#include "s2cd/highway/types.hpp"

namespace s2cd::mdp {

struct RewardConfig {
  double alpha1 = 0.5;  // efficiency weight
  double alpha2 = 1.0;  // safety weight

  void validate() const {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw std::invalid_argument("reward weights must be positive");
  }
};

struct RewardBreakdown {
  double efficiency = 0.0;
  double cost = 0.0;
  double total = 0.0;
};

inline constexpr double kEfficiencySpeedFloor = 12.5;
inline constexpr double kEfficiencySpeedCap = 25.0;

inline double efficiency_reward(double ego_speed, const RewardConfig& cfg) {
  if (ego_speed < kEfficiencySpeedFloor) return 0.0;
  if (ego_speed < kEfficiencySpeedCap) return cfg.alpha1 * (ego_speed / kEfficiencySpeedFloor - 1.0);
  return cfg.alpha1;
}

/// Collision dominates every distance branch.
inline double safety_cost(double d_safe, bool collided, const RewardConfig& cfg) {
  if (collided) return 1.0;
  if (d_safe < 5.0) return cfg.alpha2;
  if (d_safe < 10.0) return cfg.alpha2 * (1.0 - (d_safe - 5.0) / 5.0);
  return 0.0;
}

inline RewardBreakdown step_reward(const highway::StepEvents& events, const highway::WorldState& world,
                                   const RewardConfig& cfg) {
  RewardBreakdown r;
  r.efficiency = efficiency_reward(world.ego().speed, cfg);
  r.cost = safety_cost(std::min(events.min_gap_front, events.min_gap_rear), events.collision, cfg);
  r.total = r.efficiency - r.cost;
  return r;
}

}  // namespace s2cd::mdp
