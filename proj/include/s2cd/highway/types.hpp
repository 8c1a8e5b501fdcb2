#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "s2cd/control/cubic_spline.hpp"
#include "s2cd/control/lane_change_planner.hpp"
#include "s2cd/core/random.hpp"

namespace s2cd::highway {

enum class Fidelity { Simple, Complex };
enum class Density { Low, Medium, High };

/// High-level ego command. Lane 0 is the leftmost lane, so a left change
/// decrements the lane index.
enum class Action : int { Follow = 0, LeftLaneChange = 1, RightLaneChange = 2 };
inline constexpr int kActionCount = 3;

inline Action action_from_index(int index) {
  if (index < 0 || index >= kActionCount) throw std::invalid_argument("action index out of range");
  return static_cast<Action>(index);
}
inline int index_of(Action a) { return static_cast<int>(a); }

inline std::string_view to_string(Density d) {
  switch (d) {
    case Density::Low: return "low";
    case Density::Medium: return "medium";
    case Density::High: return "high";
  }
  return "medium";
}

inline Density parse_density(std::string_view tag) {
  if (tag == "low") return Density::Low;
  if (tag == "medium") return Density::Medium;
  if (tag == "high") return Density::High;
  throw std::invalid_argument("unknown density tag '" + std::string(tag) + "'");
}

inline std::string_view to_string(Fidelity f) { return f == Fidelity::Simple ? "simple" : "complex"; }

inline Fidelity parse_fidelity(std::string_view tag) {
  if (tag == "simple") return Fidelity::Simple;
  if (tag == "complex") return Fidelity::Complex;
  throw std::invalid_argument("unknown fidelity tag '" + std::string(tag) + "'");
}

/// Centre-to-centre spacing interval between consecutive same-lane vehicles.
struct SpacingRange {
  double lo;
  double hi;
};

inline SpacingRange spacing_range(Density d) {
  switch (d) {
    case Density::Low: return {90.0, 120.0};
    case Density::Medium: return {50.0, 90.0};
    case Density::High: return {20.0, 50.0};
  }
  throw std::invalid_argument("unknown density");
}

struct SimConfig {
  Fidelity fidelity = Fidelity::Simple;
  int lanes_count = 3;
  double lane_width = 3.75;
  double speed_limit = 25.0;
  double sim_dt = 0.1;
  double decisions_per_second = 2.0;
  Density density = Density::Medium;
  double episode_length = 1000.0;
  double sensor_range = 50.0;
  double max_episode_time = 200.0;  // s of simulated time before truncation
  bool traffic = true;              // false: empty road (ego only)
  std::uint64_t seed = 0;

  static SimConfig simple(Density density = Density::Medium, std::uint64_t seed = 0) {
    SimConfig c;
    c.fidelity = Fidelity::Simple;
    c.sim_dt = 0.1;
    c.decisions_per_second = 2.0;
    c.density = density;
    c.seed = seed;
    return c;
  }

  static SimConfig complex(Density density = Density::Medium, std::uint64_t seed = 0) {
    SimConfig c;
    c.fidelity = Fidelity::Complex;
    c.sim_dt = 0.05;
    c.decisions_per_second = 20.0;
    c.density = density;
    c.seed = seed;
    return c;
  }

  control::LaneGeometry geometry() const { return {lanes_count, lane_width}; }
  double decision_interval() const { return 1.0 / decisions_per_second; }

  int substeps_per_decision() const {
    const double ratio = decision_interval() / sim_dt;
    return static_cast<int>(std::lround(ratio));
  }

  void validate() const {
    if (lanes_count < 2) throw std::invalid_argument("lanes_count must be at least 2");
    if (!(lane_width > 0.0)) throw std::invalid_argument("lane_width must be positive");
    if (!(sim_dt > 0.0)) throw std::invalid_argument("sim_dt must be positive");
    if (!(decisions_per_second > 0.0)) throw std::invalid_argument("decisions_per_second must be positive");
    if (!(sensor_range > 0.0)) throw std::invalid_argument("sensor_range must be positive");
    if (!(speed_limit > 0.0)) throw std::invalid_argument("speed_limit must be positive");
    if (!(episode_length > 0.0)) throw std::invalid_argument("episode_length must be positive");
    const double ratio = decision_interval() / sim_dt;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw std::invalid_argument("decision interval must be an integer multiple of sim_dt");
  }
};

/// In-progress lane change. Linear maneuvers interpolate the lateral position
/// over a fixed number of sub-steps; tracked maneuvers follow a spline path
/// with the lateral controller.
struct LaneChange {
  int source_lane = 0;
  int target_lane = 0;
  int substeps_done = 0;
  int total_substeps = 0;
  int decisions = 0;
  bool tracked = false;
  double start_y = 0.0;
  control::CubicSpline path;
};

struct VehicleState {
  int id = 0;
  double position = 0.0;  // longitudinal centre, m
  int lane_index = 0;
  double lateral_offset = 0.0;  // from the lane centreline, m
  double speed = 0.0;
  double target_speed = 25.0;
  double length = 5.0;
  double width = 2.0;
  bool is_ego = false;
  std::optional<LaneChange> lane_change;
  control::LateralTracker tracker;
  double lane_change_cooldown = 0.0;  // s, traffic only

  bool occupies(int lane) const {
    if (lane_index == lane) return true;
    return lane_change && (lane_change->source_lane == lane || lane_change->target_lane == lane);
  }
};

struct WorldState {
  SimConfig config;
  std::vector<VehicleState> vehicles;
  double sim_time = 0.0;
  double ego_distance_travelled = 0.0;
  std::uint64_t substep_count = 0;
  std::uint64_t decision_count = 0;
  Rng rng;

  std::size_t ego_index() const {
    for (std::size_t i = 0; i < vehicles.size(); ++i)
      if (vehicles[i].is_ego) return i;
    throw std::logic_error("world has no ego vehicle");
  }
  const VehicleState& ego() const { return vehicles[ego_index()]; }
  VehicleState& ego() { return vehicles[ego_index()]; }

  double lateral_position(const VehicleState& v) const {
    return config.geometry().center(v.lane_index) + v.lateral_offset;
  }

  const VehicleState* find(int id) const {
    for (const auto& v : vehicles)
      if (v.id == id) return &v;
    return nullptr;
  }
};

struct StepEvents {
  bool collision = false;
  double min_gap_front = 0.0;
  double min_gap_rear = 0.0;
  bool episode_done = false;
  bool success = false;
  bool truncated = false;
  bool invalid_command = false;  // lane change into a nonexistent lane, degraded to Follow
};

}  // namespace s2cd::highway
