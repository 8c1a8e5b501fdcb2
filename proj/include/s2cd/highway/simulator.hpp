#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cd/control/idm.hpp"
#include "s2cd/control/lane_change_planner.hpp"
#include "s2cd/control/pid.hpp"
#include "s2cd/highway/types.hpp"

namespace s2cd::highway {

// Spawn layout, relative to the ego start position.
inline constexpr double kSpawnBehind = 150.0;
inline constexpr double kSpawnBeyondEnd = 200.0;
inline constexpr double kEgoClearFront = 35.0;  // centre distance, i.e. 30 m bumper gap
inline constexpr double kEgoClearRear = 15.0;
inline constexpr double kTrafficMinTargetSpeed = 15.0;
inline constexpr double kTrafficMaxTargetSpeed = 25.0;

// Traffic lane-change rule.
inline constexpr double kMobilGainThreshold = 0.2;  // m/s^2
inline constexpr double kMobilSafetyGap = 10.0;     // m, front and rear in the target lane
inline constexpr double kTrafficLaneChangeDuration = 1.0;
inline constexpr double kTrafficDecisionPeriod = 1.0;
inline constexpr double kTrafficLaneChangeCooldown = 5.0;

inline constexpr double kTrackedCompletionTolerance = 0.15;  // m from the target centreline

inline void sort_vehicles(WorldState& world) {
  std::sort(world.vehicles.begin(), world.vehicles.end(), [](const VehicleState& a, const VehicleState& b) {
    if (a.lane_index != b.lane_index) return a.lane_index < b.lane_index;
    if (a.position != b.position) return a.position < b.position;
    return a.id < b.id;
  });
}

inline bool is_sorted(const WorldState& world) {
  return std::is_sorted(world.vehicles.begin(), world.vehicles.end(), [](const VehicleState& a, const VehicleState& b) {
    if (a.lane_index != b.lane_index) return a.lane_index < b.lane_index;
    if (a.position != b.position) return a.position < b.position;
    return a.id < b.id;
  });
}

inline WorldState spawn_scenario(const SimConfig& config) {
  config.validate();
  WorldState world;
  world.config = config;
  world.rng.seed(config.seed);
  Rng& rng = world.rng;

  const int ego_lane = config.lanes_count / 2;
  VehicleState ego;
  ego.id = 0;
  ego.is_ego = true;
  ego.lane_index = ego_lane;
  ego.target_speed = config.speed_limit;
  world.vehicles.push_back(ego);

  const SpacingRange spacing = spacing_range(config.density);
  const double end = config.episode_length + kSpawnBeyondEnd;
  int next_id = 1;
  for (int lane = 0; config.traffic && lane < config.lanes_count; ++lane) {
    double p = -kSpawnBehind + uniform(rng, 0.0, spacing.hi);
    while (p < end) {
      const double target = uniform(rng, kTrafficMinTargetSpeed, kTrafficMaxTargetSpeed);
      const bool clear_of_ego = lane != ego_lane || p <= -kEgoClearRear || p >= kEgoClearFront;
      if (clear_of_ego) {
        VehicleState v;
        v.id = next_id++;
        v.position = p;
        v.lane_index = lane;
        v.target_speed = target;
        world.vehicles.push_back(v);
      }
      p += uniform(rng, spacing.lo, spacing.hi);
    }
  }
  sort_vehicles(world);
  return world;
}

namespace detail {

inline double bumper_gap(const VehicleState& rear, const VehicleState& front) {
  return (front.position - rear.position) - 0.5 * (front.length + rear.length);
}

/// Nearest vehicle strictly ahead of `self` occupying `lane`.
inline const VehicleState* leader_in_lane(const WorldState& world, const VehicleState& self, int lane) {
  const VehicleState* best = nullptr;
  for (const auto& v : world.vehicles) {
    if (v.id == self.id || !v.occupies(lane)) continue;
    if (v.position < self.position || (v.position == self.position && v.id < self.id)) continue;
    if (!best || v.position < best->position) best = &v;
  }
  return best;
}

/// Nearest vehicle behind `self` occupying `lane`.
inline const VehicleState* follower_in_lane(const WorldState& world, const VehicleState& self, int lane) {
  const VehicleState* best = nullptr;
  for (const auto& v : world.vehicles) {
    if (v.id == self.id || !v.occupies(lane)) continue;
    if (v.position > self.position || (v.position == self.position && v.id > self.id)) continue;
    if (!best || v.position > best->position) best = &v;
  }
  return best;
}

inline control::IdmParams idm_for(const VehicleState& v) {
  control::IdmParams p;
  p.desired_speed = v.target_speed;
  return p;
}

inline double idm_against(const VehicleState& self, const VehicleState* leader, const control::IdmParams& p) {
  if (!leader) return control::idm_accel(self.speed, self.speed, control::kNoLeaderGap, p);
  const double gap = std::max(bumper_gap(self, *leader), 1e-3);
  return control::idm_accel(self.speed, leader->speed, gap, p);
}

/// Longitudinal acceleration; a vehicle mid-maneuver reacts to leaders in both lanes.
inline double longitudinal_accel(const WorldState& world, const VehicleState& v) {
  const control::IdmParams p = idm_for(v);
  double accel = idm_against(v, leader_in_lane(world, v, v.lane_index), p);
  if (v.lane_change) {
    for (int lane : {v.lane_change->source_lane, v.lane_change->target_lane})
      if (lane != v.lane_index) accel = std::min(accel, idm_against(v, leader_in_lane(world, v, lane), p));
  }
  return accel;
}

inline void set_lateral_position(const SimConfig& config, VehicleState& v, double y) {
  const auto geometry = config.geometry();
  const int lane = std::clamp(static_cast<int>(std::floor(y / geometry.lane_width)), 0, config.lanes_count - 1);
  v.lane_index = lane;
  v.lateral_offset = y - geometry.center(lane);
}

inline void start_linear_lane_change(const SimConfig& config, VehicleState& v, int target_lane, int total_substeps) {
  LaneChange lc;
  lc.source_lane = v.lane_index;
  lc.target_lane = target_lane;
  lc.total_substeps = total_substeps;
  lc.start_y = config.geometry().center(v.lane_index) + v.lateral_offset;
  v.lane_change = std::move(lc);
}

inline void start_tracked_lane_change(const SimConfig& config, VehicleState& v, int target_lane) {
  const auto geometry = config.geometry();
  LaneChange lc;
  lc.source_lane = v.lane_index;
  lc.target_lane = target_lane;
  lc.tracked = true;
  lc.start_y = geometry.center(v.lane_index) + v.lateral_offset;
  const auto waypoints = control::plan_lane_change({v.position, lc.start_y}, v.lane_index, target_lane, geometry);
  lc.path = control::CubicSpline(waypoints);
  v.lane_change = std::move(lc);
  v.tracker.pid = {};
}

inline void advance_lateral(const WorldState& world, VehicleState& v, double dt) {
  const SimConfig& config = world.config;
  const auto geometry = config.geometry();
  const bool tracked_vehicle = v.is_ego && config.fidelity == Fidelity::Complex;

  if (tracked_vehicle) {
    const double y = geometry.center(v.lane_index) + v.lateral_offset;
    double y_next;
    if (v.lane_change) {
      y_next = v.tracker.step(v.lane_change->path, v.position, y, dt, control::PidGains::lateral(), control::LateralPlant{});
    } else {
      const double centre = geometry.center(v.lane_index);
      y_next = v.tracker.step([centre](double) { return centre; }, v.position, y, dt, control::PidGains::lateral(),
                              control::LateralPlant{});
    }
    set_lateral_position(config, v, y_next);
    if (v.lane_change && std::abs(y_next - geometry.center(v.lane_change->target_lane)) < kTrackedCompletionTolerance) {
      v.lane_change.reset();
    }
    return;
  }

  if (!v.lane_change) return;
  LaneChange& lc = *v.lane_change;
  lc.substeps_done = std::min(lc.substeps_done + 1, lc.total_substeps);
  if (lc.substeps_done >= lc.total_substeps) {
    v.lane_index = lc.target_lane;
    v.lateral_offset = 0.0;
    v.lane_change.reset();
    return;
  }
  const double fraction = static_cast<double>(lc.substeps_done) / lc.total_substeps;
  const double y = lc.start_y + fraction * (geometry.center(lc.target_lane) - lc.start_y);
  const int source = lc.source_lane;
  const int target = lc.target_lane;
  set_lateral_position(config, v, y);
  // Keep the interpolating vehicle attributed to one of its two lanes.
  if (v.lane_index != source && v.lane_index != target) v.lane_index = source;
}

inline bool rectangles_overlap(const WorldState& world, const VehicleState& a, const VehicleState& b) {
  const double dx = std::abs(a.position - b.position);
  const double dy = std::abs(world.lateral_position(a) - world.lateral_position(b));
  return dx < 0.5 * (a.length + b.length) && dy < 0.5 * (a.width + b.width);
}

}  // namespace detail

struct TrafficDecision {
  double accel = 0.0;
  Action lane_decision = Action::Follow;
};

/// IDM acceleration plus a MOBIL-style lane choice for one traffic vehicle:
/// change lanes only when the IDM acceleration in the adjacent lane beats the
/// current one by more than the gain threshold and both target-lane gaps exceed
/// the safety gap.
inline TrafficDecision traffic_policy(const WorldState& world, int vehicle_id) {
  const VehicleState* self = world.find(vehicle_id);
  if (!self) throw std::invalid_argument("unknown vehicle id");
  if (self->is_ego) throw std::invalid_argument("traffic_policy called on the ego vehicle");

  TrafficDecision decision;
  decision.accel = detail::longitudinal_accel(world, *self);
  if (self->lane_change) return decision;

  const control::IdmParams p = detail::idm_for(*self);
  const double current = detail::idm_against(*self, detail::leader_in_lane(world, *self, self->lane_index), p);
  double best_gain = kMobilGainThreshold;
  for (int direction : {-1, +1}) {
    const int lane = self->lane_index + direction;
    if (lane < 0 || lane >= world.config.lanes_count) continue;
    const VehicleState* leader = detail::leader_in_lane(world, *self, lane);
    const VehicleState* follower = detail::follower_in_lane(world, *self, lane);
    const double front_gap = leader ? detail::bumper_gap(*self, *leader) : control::kNoLeaderGap;
    const double rear_gap = follower ? detail::bumper_gap(*follower, *self) : control::kNoLeaderGap;
    if (front_gap <= kMobilSafetyGap || rear_gap <= kMobilSafetyGap) continue;
    const double gain = detail::idm_against(*self, leader, p) - current;
    if (gain > best_gain) {
      best_gain = gain;
      decision.lane_decision = direction < 0 ? Action::LeftLaneChange : Action::RightLaneChange;
    }
  }
  return decision;
}

/// Collision flag and bumper gaps for the ego. Gaps are measured to the
/// nearest vehicles occupying the ego's lane (both lanes during a maneuver),
/// floored at 0 and capped at the sensor range.
inline StepEvents detect_collision(const WorldState& world) {
  StepEvents events;
  const VehicleState& ego = world.ego();
  const double range = world.config.sensor_range;

  const double y = world.lateral_position(ego);
  if (y - 0.5 * ego.width < 0.0 || y + 0.5 * ego.width > world.config.geometry().road_width()) events.collision = true;

  events.min_gap_front = range;
  events.min_gap_rear = range;
  std::vector<int> lanes{ego.lane_index};
  if (ego.lane_change) {
    lanes.push_back(ego.lane_change->source_lane);
    lanes.push_back(ego.lane_change->target_lane);
  }
  for (const auto& v : world.vehicles) {
    if (v.is_ego) continue;
    if (detail::rectangles_overlap(world, ego, v)) events.collision = true;
    const bool same_lane = std::any_of(lanes.begin(), lanes.end(), [&](int lane) { return v.occupies(lane); });
    if (!same_lane) continue;
    if (v.position >= ego.position) {
      events.min_gap_front = std::min(events.min_gap_front, std::max(0.0, detail::bumper_gap(ego, v)));
    } else {
      events.min_gap_rear = std::min(events.min_gap_rear, std::max(0.0, detail::bumper_gap(v, ego)));
    }
  }
  return events;
}

/// Advances the world by one decision interval under `command`.
inline StepEvents step(WorldState& world, Action command) {
  const SimConfig& config = world.config;
  const double dt = config.sim_dt;
  const int substeps = config.substeps_per_decision();
  const int traffic_period = std::max(1, static_cast<int>(std::lround(kTrafficDecisionPeriod / dt)));
  const int traffic_lane_change_substeps = std::max(1, static_cast<int>(std::lround(kTrafficLaneChangeDuration / dt)));

  bool invalid_command = false;
  {
    VehicleState& ego = world.ego();
    if (!ego.lane_change && command != Action::Follow) {
      const int target = ego.lane_index + (command == Action::LeftLaneChange ? -1 : +1);
      if (target < 0 || target >= config.lanes_count) {
        invalid_command = true;
      } else if (config.fidelity == Fidelity::Simple) {
        detail::start_linear_lane_change(config, ego, target, 2 * substeps);
      } else {
        detail::start_tracked_lane_change(config, ego, target);
      }
    }
    if (ego.lane_change) ++ego.lane_change->decisions;
  }

  bool collision = false;
  std::vector<double> accel(world.vehicles.size());
  for (int k = 0; k < substeps; ++k) {
    if (world.substep_count % static_cast<std::uint64_t>(traffic_period) == 0) {
      std::vector<std::pair<std::size_t, Action>> changes;
      for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
        const VehicleState& v = world.vehicles[i];
        if (v.is_ego || v.lane_change || v.lane_change_cooldown > 0.0) continue;
        const TrafficDecision d = traffic_policy(world, v.id);
        if (d.lane_decision != Action::Follow) changes.emplace_back(i, d.lane_decision);
      }
      for (const auto& [i, a] : changes) {
        VehicleState& v = world.vehicles[i];
        const int target = v.lane_index + (a == Action::LeftLaneChange ? -1 : +1);
        detail::start_linear_lane_change(config, v, target, traffic_lane_change_substeps);
        v.lane_change_cooldown = kTrafficLaneChangeCooldown;
      }
    }

    accel.resize(world.vehicles.size());
    for (std::size_t i = 0; i < world.vehicles.size(); ++i) accel[i] = detail::longitudinal_accel(world, world.vehicles[i]);

    for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
      VehicleState& v = world.vehicles[i];
      const double before = v.position;
      v.position += v.speed * dt;
      v.speed = std::clamp(v.speed + accel[i] * dt, 0.0, config.speed_limit);
      if (v.is_ego) world.ego_distance_travelled += v.position - before;
      if (v.lane_change_cooldown > 0.0) v.lane_change_cooldown = std::max(0.0, v.lane_change_cooldown - dt);
    }
    for (auto& v : world.vehicles) detail::advance_lateral(world, v, dt);

    sort_vehicles(world);
    world.sim_time += dt;
    ++world.substep_count;
    if (detect_collision(world).collision) {
      collision = true;
      break;
    }
  }
  ++world.decision_count;

  StepEvents events = detect_collision(world);
  events.collision = collision || events.collision;
  events.invalid_command = invalid_command;
  const bool reached = world.ego_distance_travelled >= config.episode_length;
  events.success = reached && !events.collision;
  events.truncated = !events.collision && !reached && world.sim_time >= config.max_episode_time - 1e-9;
  events.episode_done = events.collision || reached || events.truncated;
  return events;
}

/// FNV-1a over the kinematic state; equal hashes for bit-identical worlds.
inline std::uint64_t world_hash(const WorldState& world) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&world.sim_time, sizeof world.sim_time);
  mix(&world.ego_distance_travelled, sizeof world.ego_distance_travelled);
  for (const auto& v : world.vehicles) {
    mix(&v.id, sizeof v.id);
    mix(&v.position, sizeof v.position);
    mix(&v.lane_index, sizeof v.lane_index);
    mix(&v.lateral_offset, sizeof v.lateral_offset);
    mix(&v.speed, sizeof v.speed);
  }
  return h;
}

/// Debug snapshot {sim_time, vehicles:[{id, lane, pos, speed}]}.
inline nlohmann::json snapshot_json(const WorldState& world) {
  nlohmann::json vehicles = nlohmann::json::array();
  for (const auto& v : world.vehicles)
    vehicles.push_back({{"id", v.id}, {"lane", v.lane_index}, {"pos", v.position}, {"speed", v.speed}});
  return {{"sim_time", world.sim_time}, {"vehicles", std::move(vehicles)}};
}

}  // namespace s2cd::highway
