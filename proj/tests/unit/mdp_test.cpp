#include <cmath>

#include <gtest/gtest.h>

#include "s2cd/core/random.hpp"
#include "s2cd/mdp/highway_env.hpp"

using namespace s2cd;
using namespace s2cd::mdp;
using highway::SimConfig;
using highway::VehicleState;
using highway::WorldState;

namespace {

WorldState world_with(std::vector<VehicleState> others, double ego_speed = 22.0) {
  WorldState w;
  w.config = SimConfig::simple();
  VehicleState ego;
  ego.is_ego = true;
  ego.lane_index = 1;
  ego.position = 200.0;
  ego.speed = ego_speed;
  w.vehicles.push_back(ego);
  int id = 1;
  for (auto& v : others) {
    v.id = id++;
    w.vehicles.push_back(v);
  }
  highway::sort_vehicles(w);
  return w;
}

VehicleState at(int lane, double pos, double speed) {
  VehicleState v;
  v.lane_index = lane;
  v.position = pos;
  v.speed = speed;
  return v;
}

}  // namespace

TEST(Observation, EmptyRoadUsesSentinels) {
  const auto o = build_observation(world_with({}));
  for (const auto& n : o.neighbors) {
    EXPECT_EQ(n.distance, 50.0);
    EXPECT_EQ(n.speed, 22.0);
  }
}

TEST(Observation, FrontVehicleRawAndNormalized) {
  const auto o = build_observation(world_with({at(1, 230.0, 20.0)}));
  const auto& f = o.neighbors[static_cast<int>(Slot::Front)];
  EXPECT_EQ(f.speed, 20.0);
  EXPECT_EQ(f.distance, 30.0);
  const auto n = o.normalize().neighbors[static_cast<int>(Slot::Front)];
  EXPECT_DOUBLE_EQ(n.speed, 0.8);
  EXPECT_DOUBLE_EQ(n.distance, 0.6);
}

TEST(Observation, NearestCandidateWinsEachSlot) {
  const auto o = build_observation(
      world_with({at(0, 240.0, 10.0), at(0, 212.0, 11.0), at(0, 185.0, 12.0), at(2, 199.0, 13.0), at(2, 150.0, 14.0)}));
  EXPECT_EQ(o.neighbors[static_cast<int>(Slot::FrontLeft)].distance, 12.0);
  EXPECT_EQ(o.neighbors[static_cast<int>(Slot::RearLeft)].distance, 15.0);
  EXPECT_EQ(o.neighbors[static_cast<int>(Slot::RearRight)].distance, 1.0);
  EXPECT_EQ(o.neighbors[static_cast<int>(Slot::FrontRight)].distance, 50.0);  // 150 m is out of range
  EXPECT_EQ(o.to_vector().size(), kObservationSize);
}

TEST(Observation, NormalizedComponentsInUnitIntervalAlongEpisodes) {
  HighwayEnv env(SimConfig::simple(highway::Density::High), {}, 1);
  Rng rng(2);
  for (int e = 0; e < 5; ++e) {
    auto obs = env.reset();
    for (int k = 0; k < 200; ++k) {
      for (double x : obs) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
      const auto s = env.step(static_cast<int>(uniform_index(rng, 3)));
      obs = s.observation;
      if (s.done) break;
    }
  }
}

TEST(Reward, EfficiencyBranches) {
  RewardConfig cfg;
  EXPECT_EQ(efficiency_reward(10.0, cfg), 0.0);
  EXPECT_EQ(efficiency_reward(25.0, cfg), 0.5);
  EXPECT_DOUBLE_EQ(efficiency_reward(18.75, cfg), 0.5 * (18.75 / 12.5 - 1.0));
  EXPECT_DOUBLE_EQ(efficiency_reward(18.75, cfg), 0.25);
  EXPECT_EQ(efficiency_reward(12.5, cfg), 0.0);
  EXPECT_NEAR(efficiency_reward(25.0 - 1e-12, cfg), 0.5, 1e-12);
}

TEST(Reward, SafetyCostBranches) {
  RewardConfig cfg;
  EXPECT_EQ(safety_cost(40.0, true, cfg), 1.0);
  EXPECT_EQ(safety_cost(3.0, false, cfg), 1.0);
  EXPECT_DOUBLE_EQ(safety_cost(7.5, false, cfg), 1.0 * (1.0 - 2.5 / 5.0));
  EXPECT_EQ(safety_cost(10.0, false, cfg), 0.0);
  EXPECT_NEAR(safety_cost(10.0 - 1e-12, false, cfg), 0.0, 1e-12);
  EXPECT_EQ(safety_cost(5.0, false, cfg), 1.0);
}

TEST(Reward, MonotoneAndBounded) {
  RewardConfig cfg;
  double prev_e = -1, prev_c = 2;
  for (int i = 0; i <= 2500; ++i) {
    const double v = i * 0.01;
    EXPECT_GE(efficiency_reward(v, cfg), prev_e);
    prev_e = efficiency_reward(v, cfg);
    const double d = 1e-6 + i * 0.01;
    EXPECT_LE(safety_cost(d, false, cfg), prev_c);
    prev_c = safety_cost(d, false, cfg);
    for (bool col : {false, true}) {
      const double total = efficiency_reward(v, cfg) - safety_cost(d, col, cfg);
      EXPECT_GE(total, -1.0);
      EXPECT_LE(total, cfg.alpha1);
    }
  }
}

TEST(Reward, StepRewardComposition) {
  RewardConfig cfg;
  highway::StepEvents ev;
  ev.min_gap_front = 40;
  ev.min_gap_rear = 45;
  auto r = step_reward(ev, world_with({}, 25.0), cfg);
  EXPECT_EQ(r.total, 0.5);
  EXPECT_EQ(r.total, r.efficiency - r.cost);

  ev.collision = true;
  r = step_reward(ev, world_with({}, 0.0), cfg);
  EXPECT_EQ(r.total, -1.0);

  ev = {};
  ev.min_gap_front = 10;
  ev.min_gap_rear = 30;
  EXPECT_EQ(step_reward(ev, world_with({}, 12.5), cfg).total, 0.0);
}

TEST(Env, ResetsAreSeededPerEpisode) {
  HighwayEnv a(SimConfig::complex(), {}, 42), b(SimConfig::complex(), {}, 42);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(a.reset(), b.reset());
    EXPECT_EQ(highway::world_hash(a.world()), highway::world_hash(b.world()));
  }
  HighwayEnv c(SimConfig::complex(), {}, 42);
  c.reset();
  const auto h0 = highway::world_hash(c.world());
  c.reset();
  EXPECT_NE(h0, highway::world_hash(c.world()));
}
