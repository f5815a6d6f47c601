#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cocosched/rng.hpp"
#include "cocosched/simenv.hpp"
#include "cocosched/util.hpp"

namespace cocosched {

enum class HeuristicKind { SJF, FCFS, QOS, HVF, RANDOM };

inline HeuristicKind heuristic_from(const std::string& name) {
  if (name == "sjf") return HeuristicKind::SJF;
  if (name == "fcfs") return HeuristicKind::FCFS;
  if (name == "qos") return HeuristicKind::QOS;
  if (name == "hvf") return HeuristicKind::HVF;
  if (name == "random") return HeuristicKind::RANDOM;
  throw ConfigError("unknown policy '" + name + "' (sjf|fcfs|qos|hvf|random)");
}

inline const char* heuristic_name(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::SJF: return "sjf";
    case HeuristicKind::FCFS: return "fcfs";
    case HeuristicKind::QOS: return "qos";
    case HeuristicKind::HVF: return "hvf";
    case HeuristicKind::RANDOM: return "random";
  }
  return "?";
}

// Greedy one-job pick over the valid ready slots; the driver re-invokes
// within a tick until no-op. SJF = min duration, FCFS = min arrival,
// QOS = earliest deadline, HVF = max value; ties go to the lowest job id.
// RANDOM draws uniformly over valid slots plus no-op. No valid slot = no-op.
inline int select(HeuristicKind kind, const ClusterState& state,
                  const std::vector<bool>& mask, Rng& rng) {
  const int noop = static_cast<int>(mask.size()) - 1;
  if (kind == HeuristicKind::RANDOM) {
    std::vector<int> options;
    for (int i = 0; i < noop; ++i)
      if (mask[static_cast<std::size_t>(i)]) options.push_back(i);
    options.push_back(noop);
    return options[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
  }
  int best = noop;
  double best_key = 0.0;
  std::int64_t best_id = 0;
  for (int i = 0; i < noop; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const auto& slot = state.ready_pool[static_cast<std::size_t>(i)];
    if (!slot) continue;
    double key = 0.0;
    switch (kind) {
      case HeuristicKind::SJF: key = static_cast<double>(slot->duration); break;
      case HeuristicKind::FCFS: key = static_cast<double>(slot->arrival); break;
      case HeuristicKind::QOS: key = static_cast<double>(qos_deadline(*slot)); break;
      case HeuristicKind::HVF: key = -slot->value; break;
      case HeuristicKind::RANDOM: break;
    }
    if (best == noop || key < best_key ||
        (key == best_key && slot->id < best_id)) {
      best = i;
      best_key = key;
      best_id = slot->id;
    }
  }
  return best;
}

}  // namespace cocosched
