#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "s2cd/core/error.hpp"
#include "s2cd/nn/dense_net.hpp"

namespace s2cd::nn {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "s2cd-dense-net";

inline nlohmann::json to_json(const NetSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden", spec.hidden},
          {"output_dim", spec.output_dim},
          {"head", std::string(to_string(spec.head))},
          {"activation", "tanh"}};
}

inline NetSpec spec_from_json(const nlohmann::json& j) {
  NetSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  spec.output_dim = j.at("output_dim").get<std::size_t>();
  spec.head = parse_head(j.at("head").get<std::string>());
  if (j.value("activation", "tanh") != "tanh") throw ConfigError("only tanh activations are supported");
  spec.validate();
  return spec;
}

/// JSON checkpoint. Doubles are written with enough digits to round-trip
/// bit-exactly.
inline nlohmann::json to_json(const DenseNet& net) {
  return {{"format", kCheckpointFormat}, {"version", kCheckpointVersion}, {"spec", to_json(net.spec())}, {"params", net.params()}};
}

inline DenseNet net_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kCheckpointFormat) throw ConfigError("not a dense-net checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  DenseNet net(spec_from_json(j.at("spec")));
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.param_count()) throw ConfigError("checkpoint parameter count does not match its spec");
  for (double p : params)
    if (!std::isfinite(p)) throw ConfigError("checkpoint contains non-finite parameters");
  net.params() = std::move(params);
  return net;
}

inline void save_net(const DenseNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << to_json(net).dump() << '\n';
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

inline DenseNet load_net(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  try {
    return net_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace s2cd::nn
