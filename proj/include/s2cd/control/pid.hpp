#pragma once

#include <algorithm>
#include <stdexcept>

namespace s2cd::control {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = 1.0;  // |integral of error| is clamped to this

  static constexpr PidGains lateral() { return {0.75, 0.2, 0.01, 1.0}; }
  static constexpr PidGains longitudinal() { return {0.37, 0.016, 0.012, 1.0}; }
};

struct PidState {
  double integral = 0.0;
  double previous_error = 0.0;
};

/// One controller update. The derivative uses the previous error, which is
/// zero on the first call.
inline double pid_step(const PidGains& gains, double error, PidState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("PID dt must be positive");
  state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit, gains.integral_limit);
  const double derivative = (error - state.previous_error) / dt;
  state.previous_error = error;
  return gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
}

}  // namespace s2cd::control
