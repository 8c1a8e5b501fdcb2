#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/mdp/highway_env.hpp"

namespace s2cd::ppo {

/// One row per collection phase.
struct PhaseMetrics {
  std::size_t step = 0;  // environment steps consumed so far
  std::size_t episodes = 0;  // episodes finished during the phase
  double mean_return = 0.0;
  double mean_cost = 0.0;
  double mean_speed = 0.0;
  std::size_t collisions = 0;
  std::size_t successes = 0;
  double entropy = 0.0;
  double kl = 0.0;  // mean KL(old || new) over the phase's update
  double intervention_rate = 0.0;
  // S2CD-only columns.
  double tau = 0.0;
  double mean_kl = 0.0;  // teacher-student KL at collection
  double teacher_sample_fraction = 0.0;
};

/// Accumulates episodic statistics during collection.
class EpisodeTracker {
 public:
  void record(const mdp::EnvStep& s) {
    ret_ += s.reward.total;
    cost_ += s.reward.cost;
    speed_sum_ += s.ego_speed;
    ++steps_;
    if (s.done) {
      ++episodes_;
      return_sum_ += ret_;
      cost_sum_ += cost_;
      collisions_ += s.collision ? 1 : 0;
      successes_ += s.success ? 1 : 0;
      ret_ = cost_ = 0.0;
    }
  }

  /// Moves the phase totals into `m` and clears them; the running episode carries over.
  void flush_into(PhaseMetrics& m) {
    m.episodes = episodes_;
    m.mean_return = episodes_ ? return_sum_ / static_cast<double>(episodes_) : 0.0;
    m.mean_cost = episodes_ ? cost_sum_ / static_cast<double>(episodes_) : 0.0;
    m.mean_speed = steps_ ? speed_sum_ / static_cast<double>(steps_) : 0.0;
    m.collisions = collisions_;
    m.successes = successes_;
    episodes_ = steps_ = collisions_ = successes_ = 0;
    return_sum_ = cost_sum_ = speed_sum_ = 0.0;
  }

 private:
  double ret_ = 0.0, cost_ = 0.0;
  double return_sum_ = 0.0, cost_sum_ = 0.0, speed_sum_ = 0.0;
  std::size_t steps_ = 0, episodes_ = 0, collisions_ = 0, successes_ = 0;
};

inline constexpr const char* kPpoCsvHeader =
    "step,episodes,mean_return,mean_cost,mean_speed,collisions,successes,entropy,kl,intervention_rate";
inline constexpr const char* kS2cdCsvHeader =
    "step,episodes,mean_return,mean_cost,mean_speed,collisions,successes,entropy,kl,intervention_rate,tau,mean_kl,"
    "teacher_sample_fraction";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string metrics_csv(const std::vector<PhaseMetrics>& rows, bool s2cd_columns) {
  std::string out = s2cd_columns ? kS2cdCsvHeader : kPpoCsvHeader;
  out += '\n';
  for (const auto& m : rows) {
    out += std::to_string(m.step) + ',' + std::to_string(m.episodes) + ',' + format_double(m.mean_return) + ',' +
           format_double(m.mean_cost) + ',' + format_double(m.mean_speed) + ',' + std::to_string(m.collisions) + ',' +
           std::to_string(m.successes) + ',' + format_double(m.entropy) + ',' + format_double(m.kl) + ',' +
           format_double(m.intervention_rate);
    if (s2cd_columns)
      out += ',' + format_double(m.tau) + ',' + format_double(m.mean_kl) + ',' + format_double(m.teacher_sample_fraction);
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace s2cd::ppo
