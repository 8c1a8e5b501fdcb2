#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "s2cd/highway/types.hpp"

namespace s2cd::mdp {

/// Neighbour slots in the order they appear in the state vector.
enum class Slot : int { Front = 0, FrontLeft = 1, RearLeft = 2, FrontRight = 3, RearRight = 4 };
inline constexpr int kSlotCount = 5;
inline constexpr std::size_t kObservationSize = 1 + 2 * kSlotCount;

inline constexpr double kSpeedScale = 25.0;
inline constexpr double kDistanceScale = 50.0;

struct Neighbor {
  double speed = 0.0;
  double distance = 0.0;
};

/// Ego speed plus (speed, distance) for the front, front-left, rear-left,
/// front-right and rear-right vehicles. Distances are centre-to-centre
/// longitudinal separations.
struct Observation {
  double ego_speed = 0.0;
  std::array<Neighbor, kSlotCount> neighbors{};
  bool normalized = false;

  /// Flattened as (v_e, v_1, d_1, ..., v_5, d_5).
  std::vector<double> to_vector() const {
    std::vector<double> out;
    out.reserve(kObservationSize);
    out.push_back(ego_speed);
    for (const auto& n : neighbors) {
      out.push_back(n.speed);
      out.push_back(n.distance);
    }
    return out;
  }

  Observation normalize() const {
    if (normalized) return *this;
    Observation o = *this;
    o.ego_speed /= kSpeedScale;
    for (auto& n : o.neighbors) {
      n.speed /= kSpeedScale;
      n.distance /= kDistanceScale;
    }
    o.normalized = true;
    return o;
  }
};

/// Raw (unnormalized) observation. An empty slot holds (v_e, sensor_range).
inline Observation build_observation(const highway::WorldState& world) {
  const auto& ego = world.ego();
  const double range = world.config.sensor_range;
  Observation obs;
  obs.ego_speed = ego.speed;
  for (auto& n : obs.neighbors) n = {ego.speed, range};

  auto consider = [&](Slot slot, const highway::VehicleState& v, double distance) {
    auto& n = obs.neighbors[static_cast<int>(slot)];
    if (distance <= range && distance < n.distance) n = {v.speed, distance};
  };

  for (const auto& v : world.vehicles) {
    if (v.is_ego) continue;
    const double dx = v.position - ego.position;
    const double distance = std::abs(dx);
    const bool ahead = dx >= 0.0;
    if (v.lane_index == ego.lane_index) {
      if (dx > 0.0) consider(Slot::Front, v, distance);
    } else if (v.lane_index == ego.lane_index - 1) {
      consider(ahead ? Slot::FrontLeft : Slot::RearLeft, v, distance);
    } else if (v.lane_index == ego.lane_index + 1) {
      consider(ahead ? Slot::FrontRight : Slot::RearRight, v, distance);
    }
  }
  return obs;
}

inline std::vector<double> observation_vector(const highway::WorldState& world) {
  return build_observation(world).normalize().to_vector();
}

}  // namespace s2cd::mdp
