#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "s2cd/control/cubic_spline.hpp"
#include "s2cd/control/pid.hpp"

namespace s2cd::control {

struct LaneGeometry {
  int lanes_count = 3;
  double lane_width = 3.75;

  /// Lateral coordinate of a lane centreline; lane 0 is the leftmost lane and
  /// y grows to the right, so the road spans [0, lanes_count * lane_width].
  double center(int lane) const { return (static_cast<double>(lane) + 0.5) * lane_width; }
  double road_width() const { return lanes_count * lane_width; }
};

inline constexpr double kLaneChangeLookahead = 10.0;  // m, navigation point ahead of the vehicle

/// Waypoints for a lane change: the current position, a midpoint at half the
/// lateral offset, and the target-lane centreline point 10 m ahead. A
/// same-lane request yields a straight two-point segment.
inline std::vector<Point2> plan_lane_change(Point2 pose, int current_lane, int target_lane, const LaneGeometry& geometry) {
  if (target_lane < 0 || target_lane >= geometry.lanes_count) throw std::invalid_argument("target lane does not exist");
  if (std::abs(target_lane - current_lane) > 1) throw std::invalid_argument("lane change target must be adjacent");
  const double y_end = geometry.center(target_lane);
  if (target_lane == current_lane) return {pose, {pose.x + kLaneChangeLookahead, y_end}};
  return {pose,
          {pose.x + 0.5 * kLaneChangeLookahead, pose.y + 0.5 * (y_end - pose.y)},
          {pose.x + kLaneChangeLookahead, y_end}};
}

/// Lateral plant parameters for the Complex-fidelity vehicle. The PID output is
/// scaled into a lateral-velocity command which the vehicle follows with a
/// first-order lag.
struct LateralPlant {
  double command_gain = 8.0;      // m/s of lateral velocity per unit controller output
  double max_lateral_speed = 6.0; // m/s
  double lag = 0.1;               // s
  double preview = 2.0;           // m, lookahead at which the path error is measured
};

/// Path-tracking state owned by one vehicle.
struct LateralTracker {
  PidState pid;
  double lateral_velocity = 0.0;

  /// Advances the lateral position `y` by one step toward `reference(x + preview)`.
  /// Returns the new lateral position.
  template <class Reference>
  double step(const Reference& reference, double x, double y, double dt, const PidGains& gains, const LateralPlant& plant) {
    const double error = reference(x + plant.preview) - y;
    const double command = std::clamp(plant.command_gain * pid_step(gains, error, pid, dt), -plant.max_lateral_speed,
                                      plant.max_lateral_speed);
    lateral_velocity += (command - lateral_velocity) * std::min(1.0, dt / plant.lag);
    return y + lateral_velocity * dt;
  }
};

}  // namespace s2cd::control
