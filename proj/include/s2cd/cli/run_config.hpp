#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cd/core/error.hpp"
#include "s2cd/highway/types.hpp"
#include "s2cd/mdp/reward.hpp"
#include "s2cd/ppo/hyper_params.hpp"
#include "s2cd/s2cd/s2cd_loss.hpp"
#include "s2cd/teacher/bundle.hpp"
#include "s2cd/teacher/train_teacher.hpp"
#include "s2cd/theory/theorems.hpp"

namespace s2cd::cli {

using nlohmann::json;

struct EvalConfig {
  std::size_t episodes = 50;
  std::vector<highway::Density> densities{highway::Density::Medium};
  std::uint64_t seed = 20240;
};

/// Everything a command may need. Sections absent from the file keep their defaults.
struct RunConfig {
  highway::SimConfig sim = highway::SimConfig::complex();
  mdp::RewardConfig reward;
  ppo::HyperParams ppo;
  std::optional<std::size_t> total_steps;  // explicit budget; otherwise per-command default
  double psi = 0.2;
  double xi = 0.01;
  engine::SwitchConfig switching;
  engine::AblationFlags flags;
  bool sample_student = true;
  teacher::Quality quality = teacher::Quality::High;
  std::size_t window_rows = 20000;
  teacher::FitConfig fit{3, 64, 1e-3, 10.0, 1000};
  EvalConfig eval;
  theory::SweepConfig theory;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <class Fn>
auto tagged(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const json& root) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  check_keys(root, "config", {"sim", "reward", "ppo", "s2cd", "teacher", "eval", "theory", "seeds"});

  if (root.contains("sim")) {
    const json& j = root["sim"];
    check_keys(j, "sim", {"fidelity", "density", "lanes_count", "lane_width", "episode_length", "sensor_range",
                          "max_episode_time", "traffic"});
    std::string fidelity(to_string(c.sim.fidelity));
    read(j, "fidelity", "sim", fidelity);
    const auto f = detail::tagged("sim.fidelity", [&] { return highway::parse_fidelity(fidelity); });
    auto sim = f == highway::Fidelity::Simple ? highway::SimConfig::simple() : highway::SimConfig::complex();
    std::string density(to_string(sim.density));
    read(j, "density", "sim", density);
    sim.density = detail::tagged("sim.density", [&] { return highway::parse_density(density); });
    read(j, "lanes_count", "sim", sim.lanes_count);
    read(j, "lane_width", "sim", sim.lane_width);
    read(j, "episode_length", "sim", sim.episode_length);
    read(j, "sensor_range", "sim", sim.sensor_range);
    read(j, "max_episode_time", "sim", sim.max_episode_time);
    read(j, "traffic", "sim", sim.traffic);
    c.sim = sim;
  }
  if (root.contains("reward")) {
    const json& j = root["reward"];
    check_keys(j, "reward", {"alpha1", "alpha2"});
    read(j, "alpha1", "reward", c.reward.alpha1);
    read(j, "alpha2", "reward", c.reward.alpha2);
  }
  if (root.contains("ppo")) {
    const json& j = root["ppo"];
    check_keys(j, "ppo", {"gamma", "gae_lambda", "clip_eps", "entropy_beta", "minibatch", "update_epochs", "value_coef",
                          "steps_per_phase", "total_steps", "learning_rate", "lr_decay", "weight_decay",
                          "max_grad_norm", "hidden"});
    auto& h = c.ppo;
    read(j, "gamma", "ppo", h.gamma);
    read(j, "gae_lambda", "ppo", h.gae_lambda);
    read(j, "clip_eps", "ppo", h.clip_eps);
    read(j, "entropy_beta", "ppo", h.entropy_beta);
    read(j, "minibatch", "ppo", h.minibatch);
    read(j, "update_epochs", "ppo", h.update_epochs);
    read(j, "value_coef", "ppo", h.value_coef);
    read(j, "steps_per_phase", "ppo", h.steps_per_phase);
    read(j, "learning_rate", "ppo", h.learning_rate);
    read(j, "lr_decay", "ppo", h.lr_decay);
    read(j, "weight_decay", "ppo", h.weight_decay);
    read(j, "max_grad_norm", "ppo", h.max_grad_norm);
    read(j, "hidden", "ppo", h.hidden);
    if (j.contains("total_steps")) {
      std::size_t steps = 0;
      read(j, "total_steps", "ppo", steps);
      c.total_steps = steps;
    }
  }
  if (root.contains("s2cd")) {
    const json& j = root["s2cd"];
    check_keys(j, "s2cd", {"psi", "xi", "tolerance_eps", "q1", "q2", "dual_source", "adaptive_clip", "kl_constraint",
                           "intervention_decay", "sample_student"});
    read(j, "psi", "s2cd", c.psi);
    read(j, "xi", "s2cd", c.xi);
    read(j, "tolerance_eps", "s2cd", c.switching.tolerance_eps);
    read(j, "q1", "s2cd", c.switching.q1);
    read(j, "q2", "s2cd", c.switching.q2);
    read(j, "dual_source", "s2cd", c.flags.dual_source);
    read(j, "adaptive_clip", "s2cd", c.flags.adaptive_clip);
    read(j, "kl_constraint", "s2cd", c.flags.kl_constraint);
    read(j, "intervention_decay", "s2cd", c.flags.intervention_decay);
    read(j, "sample_student", "s2cd", c.sample_student);
  }
  if (root.contains("teacher")) {
    const json& j = root["teacher"];
    check_keys(j, "teacher", {"quality", "window_rows", "fit_epochs", "fit_minibatch", "fit_learning_rate"});
    std::string q(to_string(c.quality));
    read(j, "quality", "teacher", q);
    c.quality = detail::tagged("teacher.quality", [&] { return teacher::parse_quality(q); });
    read(j, "window_rows", "teacher", c.window_rows);
    read(j, "fit_epochs", "teacher", c.fit.epochs);
    read(j, "fit_minibatch", "teacher", c.fit.minibatch);
    read(j, "fit_learning_rate", "teacher", c.fit.learning_rate);
  }
  if (root.contains("eval")) {
    const json& j = root["eval"];
    check_keys(j, "eval", {"episodes", "densities", "seed"});
    read(j, "episodes", "eval", c.eval.episodes);
    read(j, "seed", "eval", c.eval.seed);
    if (j.contains("densities")) {
      std::vector<std::string> tags;
      read(j, "densities", "eval", tags);
      if (tags.empty()) throw ConfigError("eval.densities must not be empty");
      c.eval.densities.clear();
      for (const auto& t : tags)
        c.eval.densities.push_back(detail::tagged("eval.densities", [&] { return highway::parse_density(t); }));
    }
  }
  if (root.contains("theory")) {
    const json& j = root["theory"];
    check_keys(j, "theory", {"instances", "min_states", "max_states", "min_actions", "max_actions", "gamma", "tolerance"});
    read(j, "instances", "theory", c.theory.instances);
    read(j, "min_states", "theory", c.theory.min_states);
    read(j, "max_states", "theory", c.theory.max_states);
    read(j, "min_actions", "theory", c.theory.min_actions);
    read(j, "max_actions", "theory", c.theory.max_actions);
    read(j, "gamma", "theory", c.theory.gamma);
    read(j, "tolerance", "theory", c.theory.tolerance);
  }
  read(root, "seeds", "config", c.seeds);
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");

  detail::tagged("config", [&] {
    c.sim.validate();
    c.reward.validate();
    ppo::HyperParams h = c.ppo;
    if (c.total_steps) h.total_steps = *c.total_steps;
    h.validate();
    c.switching.validate();
    if (!(c.psi >= 0.0 && c.psi <= h.clip_eps)) throw std::invalid_argument("psi must lie in [0, clip_eps]");
    if (!(c.xi >= 0.0)) throw std::invalid_argument("xi must be non-negative");
    if (c.eval.episodes == 0) throw std::invalid_argument("eval.episodes must be positive");
    c.theory.validate();
    return 0;
  });
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

/// Resolved configuration, written next to every command's outputs.
inline json to_json(const RunConfig& c) {
  std::vector<std::string> densities;
  for (auto d : c.eval.densities) densities.emplace_back(to_string(d));
  json j;
  j["sim"] = {{"fidelity", std::string(to_string(c.sim.fidelity))}, {"density", std::string(to_string(c.sim.density))},
              {"lanes_count", c.sim.lanes_count}, {"lane_width", c.sim.lane_width},
              {"episode_length", c.sim.episode_length}, {"sensor_range", c.sim.sensor_range},
              {"max_episode_time", c.sim.max_episode_time}, {"traffic", c.sim.traffic}};
  j["reward"] = {{"alpha1", c.reward.alpha1}, {"alpha2", c.reward.alpha2}};
  j["ppo"] = {{"gamma", c.ppo.gamma}, {"gae_lambda", c.ppo.gae_lambda}, {"clip_eps", c.ppo.clip_eps},
              {"entropy_beta", c.ppo.entropy_beta}, {"minibatch", c.ppo.minibatch},
              {"update_epochs", c.ppo.update_epochs}, {"value_coef", c.ppo.value_coef},
              {"steps_per_phase", c.ppo.steps_per_phase}, {"learning_rate", c.ppo.learning_rate},
              {"lr_decay", c.ppo.lr_decay}, {"weight_decay", c.ppo.weight_decay},
              {"max_grad_norm", c.ppo.max_grad_norm}, {"hidden", c.ppo.hidden}};
  if (c.total_steps) j["ppo"]["total_steps"] = *c.total_steps;
  j["s2cd"] = {{"psi", c.psi}, {"xi", c.xi}, {"tolerance_eps", c.switching.tolerance_eps}, {"q1", c.switching.q1},
               {"q2", c.switching.q2}, {"dual_source", c.flags.dual_source}, {"adaptive_clip", c.flags.adaptive_clip},
               {"kl_constraint", c.flags.kl_constraint}, {"intervention_decay", c.flags.intervention_decay},
               {"sample_student", c.sample_student}};
  j["teacher"] = {{"quality", std::string(to_string(c.quality))}, {"window_rows", c.window_rows},
                  {"fit_epochs", c.fit.epochs}, {"fit_minibatch", c.fit.minibatch},
                  {"fit_learning_rate", c.fit.learning_rate}};
  j["eval"] = {{"episodes", c.eval.episodes}, {"densities", densities}, {"seed", c.eval.seed}};
  j["theory"] = {{"instances", c.theory.instances}, {"min_states", c.theory.min_states},
                 {"max_states", c.theory.max_states}, {"min_actions", c.theory.min_actions},
                 {"max_actions", c.theory.max_actions}, {"gamma", c.theory.gamma}, {"tolerance", c.theory.tolerance}};
  j["seeds"] = c.seeds;
  return j;
}

/// Applies a comma-separated ablation list such as "no-kl,no-decay".
inline void apply_ablations(engine::AblationFlags& flags, const std::string& list) {
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string tok = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (tok == "no-dual-source") flags.dual_source = false;
    else if (tok == "no-adaptive-clip") flags.adaptive_clip = false;
    else if (tok == "no-kl") flags.kl_constraint = false;
    else if (tok == "no-decay") flags.intervention_decay = false;
    else if (!tok.empty()) throw ConfigError("unknown ablation '" + tok + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
}

inline engine::S2cdHyper s2cd_hyper(const RunConfig& c, std::size_t default_steps) {
  engine::S2cdHyper h;
  h.ppo = c.ppo;
  h.ppo.total_steps = c.total_steps.value_or(default_steps);
  h.psi = c.psi;
  h.xi = c.xi;
  h.switching = c.switching;
  h.flags = c.flags;
  h.sample_student = c.sample_student;
  return h;
}

inline teacher::TeacherTrainConfig teacher_config(const RunConfig& c) {
  teacher::TeacherTrainConfig t;
  t.quality = c.quality;
  t.hp = c.ppo;
  t.hp.total_steps = c.total_steps.value_or(teacher::default_teacher_steps(c.quality));
  t.density = c.sim.density;
  t.reward = c.reward;
  t.fit = c.fit;
  t.window_rows = c.window_rows;
  t.eval_episodes = c.eval.episodes;
  t.eval_seed = c.eval.seed;
  return t;
}

}  // namespace s2cd::cli
