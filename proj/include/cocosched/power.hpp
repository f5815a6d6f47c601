#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cocosched/rng.hpp"
#include "cocosched/util.hpp"

namespace cocosched {

enum class PowerKind { solar, wind, constant };

inline PowerKind power_kind_from(const std::string& name) {
  if (name == "solar") return PowerKind::solar;
  if (name == "wind") return PowerKind::wind;
  if (name == "constant") return PowerKind::constant;
  throw ConfigError("unknown power kind '" + name + "' (solar|wind|constant)");
}

struct PowerTrace {
  std::vector<double> supply;  // watts per timestep, all >= 0

  Tick horizon() const { return static_cast<Tick>(supply.size()); }

  double at(Tick t) const {
    // Beyond the recorded horizon the forecast assumes no renewable supply.
    if (t < 0 || t >= horizon()) return 0.0;
    return supply[static_cast<std::size_t>(t)];
  }
};

struct BatteryState {
  double capacity = 0.0;  // watt-timesteps
  double charge = 0.0;
  double max_rate = 0.0;  // watts, bounds both charge and discharge per tick
};

struct PowerModelConfig {
  double node_power = 100.0;  // watts per node
  int max_nodes = 10;
  int min_nodes = 0;  // grid-backed floor
  BatteryState battery;
};

inline void validate(const BatteryState& b) {
  if (b.capacity < 0) throw ConfigError("battery.capacity must be >= 0");
  if (b.charge < 0 || b.charge > b.capacity)
    throw ConfigError("battery.charge must be in [0, capacity]");
  if (b.max_rate < 0) throw ConfigError("battery.max_rate must be >= 0");
}

inline void validate(const PowerModelConfig& cfg) {
  if (cfg.node_power <= 0) throw ConfigError("node_power must be > 0");
  if (cfg.min_nodes < 0 || cfg.min_nodes > cfg.max_nodes)
    throw ConfigError("min_nodes must be in [0, max_nodes]");
  validate(cfg.battery);
}

// solar: half-sinusoid diurnal cycle (day length `period`), clipped at 0.
// wind: mean-reverting noisy walk clipped to [0, peak].
// constant: peak everywhere.
inline PowerTrace generate_power_trace(PowerKind kind, Tick horizon, double peak,
                                       std::uint64_t seed, Tick period = 24) {
  if (peak < 0) throw ConfigError("power.peak must be >= 0");
  if (period < 1) throw ConfigError("power.period must be >= 1");
  PowerTrace trace;
  trace.supply.resize(static_cast<std::size_t>(std::max<Tick>(horizon, 0)));
  Rng rng(seed);
  switch (kind) {
    case PowerKind::constant:
      std::fill(trace.supply.begin(), trace.supply.end(), peak);
      break;
    case PowerKind::solar:
      for (Tick t = 0; t < horizon; ++t) {
        const double phase = 2.0 * std::numbers::pi *
                             static_cast<double>(t % period) /
                             static_cast<double>(period);
        trace.supply[static_cast<std::size_t>(t)] =
            std::max(0.0, peak * std::sin(phase));
      }
      break;
    case PowerKind::wind: {
      const double mean = 0.5 * peak;
      double level = mean;
      for (Tick t = 0; t < horizon; ++t) {
        level += 0.15 * (mean - level) + (peak / 6.0) * rng.normal();
        level = std::clamp(level, 0.0, peak);
        trace.supply[static_cast<std::size_t>(t)] = level;
      }
      break;
    }
  }
  return trace;
}

inline constexpr const char* kPowerHeader = "timestep,watts";

inline PowerTrace parse_power_csv(std::istream& in) {
  PowerTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  Tick expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kPowerHeader)
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected power header '" + std::string(kPowerHeader) + "'");
      saw_header = true;
      continue;
    }
    auto cols = split(line, ',');
    const std::string where = "line " + std::to_string(lineno);
    if (cols.size() != 2) throw ParseError(where + ": expected 2 columns");
    const Tick t = parse_int(cols[0], where + " timestep");
    if (t != expected)
      throw ParseError(where + ": timesteps must be contiguous from 0, got " +
                       std::to_string(t) + " expected " + std::to_string(expected));
    const double watts = parse_double(cols[1], where + " watts");
    if (watts < 0) throw ParseError(where + ": watts must be >= 0");
    trace.supply.push_back(watts);
    ++expected;
  }
  return trace;
}

inline PowerTrace parse_power_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_power_csv(in);
}

inline std::string serialize_power_csv(const PowerTrace& trace) {
  std::string out = kPowerHeader;
  out += '\n';
  for (Tick t = 0; t < trace.horizon(); ++t) {
    out += std::to_string(t);
    out += ',';
    out += dtos(trace.supply[static_cast<std::size_t>(t)]);
    out += '\n';
  }
  return out;
}

// Demand-first mapping of one tick of renewable supply to powered nodes. The
// grid guarantees min_nodes; supply (plus battery discharge up to max_rate)
// powers extra nodes at node_power each; leftover supply charges the battery.
inline std::pair<int, BatteryState> available_nodes(const PowerModelConfig& cfg,
                                                    BatteryState battery,
                                                    double supply) {
  const int extra_max = cfg.max_nodes - cfg.min_nodes;
  const double discharge_cap = std::min(battery.charge, battery.max_rate);
  const double budget = supply + discharge_cap;
  int extra = static_cast<int>(std::floor(budget / cfg.node_power + 1e-12));
  extra = std::clamp(extra, 0, extra_max);
  const double need = extra * cfg.node_power;
  const double from_supply = std::min(supply, need);
  const double shortfall = need - from_supply;
  const double discharged = std::min(shortfall, discharge_cap);
  const double surplus = supply - from_supply;
  const double charged =
      std::min({surplus, battery.max_rate, battery.capacity - battery.charge});
  battery.charge = battery.charge + charged - discharged;
  if (battery.charge < 0.0) battery.charge = 0.0;
  if (battery.charge > battery.capacity) battery.charge = battery.capacity;
  return {cfg.min_nodes + extra, battery};
}

}  // namespace cocosched
