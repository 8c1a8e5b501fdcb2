#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "s2cd/core/error.hpp"
#include "s2cd/mdp/observation.hpp"
#include "s2cd/nn/checkpoint.hpp"
#include "s2cd/nn/dense_net.hpp"
#include "s2cd/ppo/learner.hpp"

namespace s2cd::teacher {

enum class Quality { High, Low, Complex };

inline std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::High: return "high";
    case Quality::Low: return "low";
    case Quality::Complex: return "complex";
  }
  return "high";
}

inline Quality parse_quality(std::string_view s) {
  if (s == "high") return Quality::High;
  if (s == "low") return Quality::Low;
  if (s == "complex") return Quality::Complex;
  throw ConfigError("unknown teacher quality '" + std::string(s) + "'");
}

/// Frozen teacher: policy, critic, and the two per-action predictors.
struct TeacherBundle {
  nn::DenseNet actor;
  nn::DenseNet critic;
  nn::DenseNet return_net;
  nn::DenseNet qvalue_net;
  Quality quality = Quality::High;
  std::size_t training_steps = 0;
  std::uint64_t seed = 0;
  double eval_success = 0.0;  // fraction in [0, 1]

  void validate() const {
    const std::size_t d = mdp::kObservationSize;
    if (actor.spec().input_dim != d || critic.spec().input_dim != d || return_net.spec().input_dim != d ||
        qvalue_net.spec().input_dim != d)
      throw ConfigError("teacher networks must all take the " + std::to_string(d) + "-number observation");
    if (actor.spec().head != nn::Head::SoftmaxPolicy || return_net.spec().output_dim != 3 ||
        qvalue_net.spec().output_dim != 3 || critic.spec().output_dim != 1)
      throw ConfigError("teacher network heads have unexpected shapes");
  }
};

struct Advice {
  int action = 0;
  ppo::Probs3 probs{};
  double r_pred = 0.0;
  std::array<double, 3> q_pred{};
};

/// Greedy teacher action with its predicted immediate reward and the full
/// per-action Q vector.
inline Advice teacher_advise(const TeacherBundle& bundle, std::span<const double> obs) {
  if (obs.size() != mdp::kObservationSize) throw std::invalid_argument("teacher expects an 11-number observation");
  for (double x : obs)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("teacher expects a normalized observation");
  Advice a;
  a.probs = ppo::to_probs3(bundle.actor.evaluate(obs));
  a.action = ppo::argmax_action(a.probs);
  a.r_pred = bundle.return_net.evaluate(obs)[static_cast<std::size_t>(a.action)];
  const auto q = bundle.qvalue_net.evaluate(obs);
  a.q_pred = {q[0], q[1], q[2]};
  return a;
}

/// FNV-1a over all parameter bits; used to show the bundle is never mutated.
inline std::uint64_t bundle_checksum(const TeacherBundle& b) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const nn::DenseNet* net : {&b.actor, &b.critic, &b.return_net, &b.qvalue_net})
    for (double p : net->params()) {
      std::uint64_t bits;
      std::memcpy(&bits, &p, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFFU;
        h *= 1099511628211ULL;
      }
    }
  return h;
}

inline constexpr const char* kManifestName = "manifest.json";

inline nlohmann::json manifest_json(const TeacherBundle& b) {
  return {{"quality_tag", std::string(to_string(b.quality))},
          {"training_steps", b.training_steps},
          {"seed", b.seed},
          {"eval_success", b.eval_success},
          {"networks", {{"actor", "actor.json"}, {"critic", "critic.json"}, {"return_net", "return_net.json"},
                        {"qvalue_net", "qvalue_net.json"}}}};
}

inline void save_bundle(const TeacherBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nn::save_net(b.actor, dir / "actor.json");
  nn::save_net(b.critic, dir / "critic.json");
  nn::save_net(b.return_net, dir / "return_net.json");
  nn::save_net(b.qvalue_net, dir / "qvalue_net.json");
  std::ofstream out(dir / kManifestName);
  if (!out) throw ConfigError("cannot write bundle manifest in " + dir.string());
  out << manifest_json(b).dump(2) << '\n';
}

inline TeacherBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw ConfigError("cannot read bundle manifest in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed bundle manifest: ") + e.what());
  }
  TeacherBundle b;
  try {
    b.quality = parse_quality(m.at("quality_tag").get<std::string>());
    b.training_steps = m.at("training_steps").get<std::size_t>();
    b.seed = m.at("seed").get<std::uint64_t>();
    b.eval_success = m.at("eval_success").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("incomplete bundle manifest: ") + e.what());
  }
  b.actor = nn::load_net(dir / "actor.json");
  b.critic = nn::load_net(dir / "critic.json");
  b.return_net = nn::load_net(dir / "return_net.json");
  b.qvalue_net = nn::load_net(dir / "qvalue_net.json");
  b.validate();
  return b;
}

}  // namespace s2cd::teacher
