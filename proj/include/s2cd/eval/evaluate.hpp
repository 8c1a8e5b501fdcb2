#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cd/mdp/highway_env.hpp"
#include "s2cd/ppo/metrics.hpp"

namespace s2cd::eval {

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::string density;
  double episodic_return = 0.0;
  double episodic_reward = 0.0;
  double episodic_cost = 0.0;
  double mean_speed = 0.0;
  std::size_t steps = 0;
  bool success = false;
  bool collision = false;
};

struct Aggregate {
  std::size_t episodes = 0;
  double episodic_return = 0.0;
  double episodic_reward = 0.0;
  double episodic_cost = 0.0;
  double episodic_speed = 0.0;
  double success_rate = 0.0;  // percent
  std::size_t collisions = 0;
};

struct EvalSummary {
  Aggregate overall;
  std::vector<std::pair<std::uint64_t, Aggregate>> per_seed;
  std::vector<EpisodeRecord> episodes;
};

inline Aggregate aggregate(const std::vector<EpisodeRecord>& rows) {
  Aggregate a;
  a.episodes = rows.size();
  if (rows.empty()) return a;
  std::size_t wins = 0;
  for (const auto& r : rows) {
    a.episodic_return += r.episodic_return;
    a.episodic_reward += r.episodic_reward;
    a.episodic_cost += r.episodic_cost;
    a.episodic_speed += r.mean_speed;
    wins += r.success ? 1 : 0;
    a.collisions += r.collision ? 1 : 0;
  }
  const double n = static_cast<double>(rows.size());
  a.episodic_return /= n;
  a.episodic_reward /= n;
  a.episodic_cost /= n;
  a.episodic_speed /= n;
  a.success_rate = 100.0 * static_cast<double>(wins) / n;
  return a;
}

/// Runs `episodes` full episodes; `policy(obs, env)` returns an action index.
/// The policy may consult the environment (e.g. to query a teacher) but must
/// not step it.
template <class Env, class Policy>
std::vector<EpisodeRecord> run_episodes(Env& env, std::size_t episodes, Policy&& policy, std::uint64_t seed_tag = 0,
                                        const std::string& density = {}) {
  std::vector<EpisodeRecord> rows;
  rows.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    EpisodeRecord r;
    r.seed = seed_tag;
    r.episode = e;
    r.density = density;
    std::vector<double> obs = env.reset();
    double speed_sum = 0.0;
    while (true) {
      const mdp::EnvStep s = env.step(policy(static_cast<const std::vector<double>&>(obs), env));
      r.episodic_return += s.reward.total;
      r.episodic_reward += s.reward.efficiency;
      r.episodic_cost += s.reward.cost;
      speed_sum += s.ego_speed;
      ++r.steps;
      if (s.done) {
        r.success = s.success;
        r.collision = s.collision;
        break;
      }
      obs = s.observation;
    }
    r.mean_speed = speed_sum / static_cast<double>(r.steps);
    rows.push_back(r);
  }
  return rows;
}

inline EvalSummary summarize(std::vector<EpisodeRecord> rows) {
  EvalSummary s;
  s.overall = aggregate(rows);
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rows)
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  for (auto seed : seeds) {
    std::vector<EpisodeRecord> sub;
    for (const auto& r : rows)
      if (r.seed == seed) sub.push_back(r);
    s.per_seed.emplace_back(seed, aggregate(sub));
  }
  s.episodes = std::move(rows);
  return s;
}

inline nlohmann::json to_json(const Aggregate& a) {
  return {{"episodes", a.episodes},
          {"episodic_return", a.episodic_return},
          {"episodic_reward", a.episodic_reward},
          {"episodic_cost", a.episodic_cost},
          {"episodic_speed", a.episodic_speed},
          {"success_rate", a.success_rate},
          {"collisions", a.collisions}};
}

inline nlohmann::json to_json(const EvalSummary& s) {
  nlohmann::json j = to_json(s.overall);
  j["per_seed"] = nlohmann::json::array();
  for (const auto& [seed, a] : s.per_seed) {
    auto row = to_json(a);
    row["seed"] = seed;
    j["per_seed"].push_back(row);
  }
  return j;
}

inline std::string episodes_csv(const std::vector<EpisodeRecord>& rows) {
  using ppo::format_double;
  std::string out = "seed,episode,density,episodic_return,episodic_reward,episodic_cost,mean_speed,steps,success,collision\n";
  for (const auto& r : rows)
    out += std::to_string(r.seed) + ',' + std::to_string(r.episode) + ',' + r.density + ',' +
           format_double(r.episodic_return) + ',' + format_double(r.episodic_reward) + ',' +
           format_double(r.episodic_cost) + ',' + format_double(r.mean_speed) + ',' + std::to_string(r.steps) + ',' +
           (r.success ? "1" : "0") + ',' + (r.collision ? "1" : "0") + '\n';
  return out;
}

}  // namespace s2cd::eval
