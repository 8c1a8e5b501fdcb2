#pragma once

#include <concepts>
#include <cstdint>
#include <vector>

#include "s2cd/core/random.hpp"
#include "s2cd/highway/simulator.hpp"
#include "s2cd/mdp/observation.hpp"
#include "s2cd/mdp/reward.hpp"

namespace s2cd::mdp {

/// Result of one decision step. `observation` is the post-step state; callers
/// reset the environment themselves once `done` is set.
struct EnvStep {
  std::vector<double> observation;
  RewardBreakdown reward;
  bool done = false;
  bool success = false;
  bool collision = false;
  double ego_speed = 0.0;
};

template <class E>
concept Environment = requires(E env, int action) {
  { env.reset() } -> std::same_as<std::vector<double>>;
  { env.step(action) } -> std::same_as<EnvStep>;
  { env.observation_size() } -> std::convertible_to<std::size_t>;
};

/// Episodic wrapper around the highway world. Each reset draws a fresh
/// scenario seeded from (base seed, episode index).
class HighwayEnv {
 public:
  HighwayEnv(highway::SimConfig config, RewardConfig reward, std::uint64_t seed)
      : config_(config), reward_(reward), seed_(seed) {
    config_.validate();
    reward_.validate();
  }

  std::vector<double> reset() {
    highway::SimConfig c = config_;
    c.seed = derive_seed(seed_, episode_index_++);
    world_ = highway::spawn_scenario(c);
    return observation_vector(world_);
  }

  EnvStep step(int action) {
    const highway::StepEvents events = highway::step(world_, highway::action_from_index(action));
    last_events_ = events;
    EnvStep out;
    out.observation = observation_vector(world_);
    out.reward = step_reward(events, world_, reward_);
    out.done = events.episode_done;
    out.success = events.success;
    out.collision = events.collision;
    out.ego_speed = world_.ego().speed;
    return out;
  }

  std::size_t observation_size() const { return kObservationSize; }
  const highway::WorldState& world() const { return world_; }
  const highway::SimConfig& config() const { return config_; }
  const highway::StepEvents& last_events() const { return last_events_; }
  std::uint64_t episodes_started() const { return episode_index_; }

 private:
  highway::SimConfig config_;
  RewardConfig reward_;
  std::uint64_t seed_;
  std::uint64_t episode_index_ = 0;
  highway::WorldState world_;
  highway::StepEvents last_events_;
};

}  // namespace s2cd::mdp
