#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cocosched/util.hpp"

namespace cocosched {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

inline void validate(const PidGains& g) {
  if (g.kp < 0 || g.ki < 0 || g.kd < 0)
    throw ConfigError("PID gains must be >= 0");
  if (g.kp == 0 && g.ki == 0 && g.kd == 0)
    throw ConfigError("PID gains must not all be zero");
}

// Feedback controller state driving the Lagrange multiplier from measured
// episodic cost against the cost limit.
struct PidState {
  PidGains gains;
  double cost_limit = 0.0;  // d; may be +inf to disable the constraint
  double integral = 0.0;    // I, clamped to >= 0
  double prev_cost = 0.0;   // J_C of the previous update
  double lambda = 0.0;
  // Applies each gain twice (P and D terms re-multiplied in the control
  // output), reproducing the printed recurrence instead of standard PID form.
  bool compat_double_gain = false;
};

inline PidState pid_init(const PidGains& gains, double cost_limit,
                         bool compat_double_gain = false) {
  validate(gains);
  if (std::isnan(cost_limit) || cost_limit < 0)
    throw ConfigError("cost limit must be >= 0");
  PidState state;
  state.gains = gains;
  state.cost_limit = cost_limit;
  state.compat_double_gain = compat_double_gain;
  return state;
}

// One controller step:
//   e  = J_C - d
//   I' = (I + e)+
//   D  = (J_C - J_C_prev)+          (one-sided: reacts to cost increases only)
//   lambda = (Kp e + Ki I' + Kd D)+
// An infinite cost limit never produces pressure, so lambda pins to 0.
inline std::pair<PidState, double> pid_update(PidState state, double cost) {
  if (cost < 0) throw ConfigError("measured cost must be >= 0");
  if (std::isinf(state.cost_limit)) {
    state.integral = 0.0;
    state.prev_cost = cost;
    state.lambda = 0.0;
    return {state, 0.0};
  }
  const double error = cost - state.cost_limit;
  state.integral = std::max(state.integral + error, 0.0);
  const double delta = std::max(cost - state.prev_cost, 0.0);
  const PidGains& g = state.gains;
  double raw;
  if (state.compat_double_gain) {
    raw = g.kp * (g.kp * error) + g.ki * state.integral + g.kd * (g.kd * delta);
  } else {
    raw = g.kp * error + g.ki * state.integral + g.kd * delta;
  }
  state.lambda = std::max(raw, 0.0);
  state.prev_cost = cost;
  return {state, state.lambda};
}

inline std::string serialize(const PidState& s) {
  return dtos(s.gains.kp) + ' ' + dtos(s.gains.ki) + ' ' + dtos(s.gains.kd) +
         ' ' + dtos(s.cost_limit) + ' ' + dtos(s.integral) + ' ' +
         dtos(s.prev_cost) + ' ' + dtos(s.lambda) + ' ' +
         (s.compat_double_gain ? '1' : '0');
}

inline PidState deserialize_pid(const std::string& text) {
  const auto parts = split(text, ' ');
  if (parts.size() != 8) throw ParseError("bad pid state: " + text);
  PidState s;
  s.gains.kp = parse_double(parts[0], "pid kp");
  s.gains.ki = parse_double(parts[1], "pid ki");
  s.gains.kd = parse_double(parts[2], "pid kd");
  s.cost_limit = parse_double(parts[3], "pid cost_limit");
  s.integral = parse_double(parts[4], "pid integral");
  s.prev_cost = parse_double(parts[5], "pid prev_cost");
  s.lambda = parse_double(parts[6], "pid lambda");
  s.compat_double_gain = parts[7] == "1";
  return s;
}

}  // namespace cocosched
