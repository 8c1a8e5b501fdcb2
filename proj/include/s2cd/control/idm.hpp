#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace s2cd::control {

struct IdmParams {
  double exponent = 4.0;        // zeta
  double desired_speed = 25.0;  // v0, m/s
  double time_gap = 0.6;        // T, s
  double min_gap = 2.0;         // s0, m
  double max_accel = 2.0;       // a, m/s^2
  double comfort_decel = 2.0;   // b, m/s^2
  double braking_floor = -9.0;  // hard clamp on the returned deceleration
};

inline constexpr double kNoLeaderGap = std::numeric_limits<double>::infinity();

/// Desired dynamic gap s* = s0 + vT + v(v - v_lead) / (2 sqrt(ab)), floored at 0
/// inside the max() of the IDM law.
inline double idm_desired_gap(double speed, double lead_speed, const IdmParams& p) {
  const double interaction = speed * (speed - lead_speed) / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
  return std::max(p.min_gap + speed * p.time_gap + interaction, 0.0);
}

/// IDM acceleration for a follower at `speed` behind a leader at `lead_speed`
/// with bumper gap `gap`. Pass kNoLeaderGap for free road.
inline double idm_accel(double speed, double lead_speed, double gap, const IdmParams& p) {
  if (!(gap > 0.0)) throw std::invalid_argument("IDM gap must be positive");
  const double free_term = std::pow(speed / p.desired_speed, p.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double ratio = idm_desired_gap(speed, lead_speed, p) / gap;
    interaction = ratio * ratio;
  }
  const double accel = p.max_accel * (1.0 - free_term - interaction);
  return std::clamp(accel, p.braking_floor, p.max_accel);
}

}  // namespace s2cd::control
