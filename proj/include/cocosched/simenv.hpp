#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cocosched/power.hpp"
#include "cocosched/util.hpp"
#include "cocosched/workload.hpp"

namespace cocosched {

struct EnvConfig {
  int max_nodes = 10;        // R_max, the full fleet
  int horizon_window = 20;   // T, lookahead rows in the occupancy image
  int ready_slots = 10;      // M
  int wait_capacity = -1;    // -1 = unbounded; arrivals beyond it are dropped
  Tick episode_length = 500;
  double delay_penalty = 0.1;  // reward units per QoS-violated job per tick
  int decisions_per_step = 0;  // 0 = defaults to ready_slots
  double discount = 0.99;

  int decision_budget() const {
    return decisions_per_step > 0 ? decisions_per_step : ready_slots;
  }
};

inline void validate(const EnvConfig& cfg) {
  if (cfg.max_nodes < 1) throw ConfigError("env.max_nodes must be >= 1");
  if (cfg.horizon_window < 1) throw ConfigError("env.horizon_window must be >= 1");
  if (cfg.ready_slots < 1) throw ConfigError("env.ready_slots must be >= 1");
  if (cfg.episode_length < 1) throw ConfigError("env.episode_length must be >= 1");
  if (cfg.delay_penalty < 0) throw ConfigError("env.delay_penalty must be >= 0");
  if (!(cfg.discount > 0.0 && cfg.discount <= 1.0))
    throw ConfigError("env.discount must be in (0,1]");
}

enum class EventKind : int { arrival, schedule, suspend, finish, delay_tick };

inline const char* event_name(EventKind kind) {
  switch (kind) {
    case EventKind::arrival: return "arrival";
    case EventKind::schedule: return "schedule";
    case EventKind::suspend: return "suspend";
    case EventKind::finish: return "finish";
    case EventKind::delay_tick: return "delay_tick";
  }
  return "?";
}

inline EventKind event_kind_from(const std::string& name) {
  if (name == "arrival") return EventKind::arrival;
  if (name == "schedule") return EventKind::schedule;
  if (name == "suspend") return EventKind::suspend;
  if (name == "finish") return EventKind::finish;
  if (name == "delay_tick") return EventKind::delay_tick;
  throw ParseError("unknown event kind '" + name + "'");
}

// detail per kind: arrival = admitted flag, schedule = start node,
// suspend = progress at suspension, finish = job value, delay_tick = 1.
struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::arrival;
  std::int64_t job_id = 0;
  double detail = 0.0;

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

inline constexpr const char* kEventHeader = "tick,event,job_id,detail";

inline std::string serialize_events(const EventLog& log) {
  std::string out = kEventHeader;
  out += '\n';
  for (const Event& e : log) {
    out += std::to_string(e.tick);
    out += ',';
    out += event_name(e.kind);
    out += ',';
    out += std::to_string(e.job_id);
    out += ',';
    out += dtos(e.detail);
    out += '\n';
  }
  return out;
}

inline EventLog parse_events(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kEventHeader)
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected event header '" + std::string(kEventHeader) + "'");
      saw_header = true;
      continue;
    }
    auto cols = split(line, ',');
    const std::string where = "line " + std::to_string(lineno);
    if (cols.size() != 4) throw ParseError(where + ": expected 4 columns");
    Event e;
    e.tick = parse_int(cols[0], where + " tick");
    e.kind = event_kind_from(cols[1]);
    e.job_id = parse_int(cols[2], where + " job_id");
    e.detail = parse_double(cols[3], where + " detail");
    log.push_back(e);
  }
  return log;
}

inline EventLog parse_events(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

// Undiscounted episodic cost: one unit per delayed job per tick.
inline double episode_cost(const EventLog& log) {
  double total = 0.0;
  for (const Event& e : log)
    if (e.kind == EventKind::delay_tick) total += e.detail;
  return total;
}

struct RunningJob {
  Job job;
  int start_node = 0;  // contiguous block [start_node, start_node + req)
};

struct ClusterState {
  Tick clock = 0;
  int nodes_on = 0;
  BatteryState battery;
  std::deque<Job> wait_pool;                  // FIFO backlog
  std::vector<std::optional<Job>> ready_pool; // M slots visible to the agent
  std::vector<RunningJob> running;
  EventLog event_log;
  int decisions_taken = 0;  // schedule decisions since the last clock advance

  int nodes_in_use() const {
    int used = 0;
    for (const RunningJob& r : running) used += r.job.req;
    return used;
  }
};

using Observation = std::vector<double>;

struct StepInfo {
  std::vector<bool> valid_mask;  // mask after the step, length M+1
  bool invalid_action = false;
  bool advanced_clock = false;
  std::size_t events_begin = 0;  // window into the state's event log
  std::size_t events_end = 0;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  StepInfo info;
};

// Running totals the environment maintains online; metrics recomputed from
// the event log must agree with these exactly.
struct OnlineStats {
  std::int64_t submitted = 0;
  std::int64_t finished = 0;
  double submitted_value = 0.0;
  double finished_value = 0.0;
  std::int64_t usage_ticks = 0;  // sum over ticks of nodes in use
  double reward_sum = 0.0;
  double cost_sum = 0.0;
};

// The green-datacenter CMDP. Power decides how many nodes are on; the agent
// picks ready-pool jobs to place on contiguous free nodes; jobs past their
// QoS deadline emit one cost unit per tick until they finish.
class SimEnv {
 public:
  SimEnv(EnvConfig cfg, JobTrace trace, PowerTrace power, PowerModelConfig pcfg,
         std::uint64_t seed = 0)
      : cfg_(std::move(cfg)),
        trace_(std::move(trace)),
        power_(std::move(power)),
        pcfg_(std::move(pcfg)),
        seed_(seed) {
    validate(cfg_);
    validate(pcfg_);
    if (pcfg_.max_nodes != cfg_.max_nodes)
      throw ConfigError("max_nodes mismatch between env and power model");
    if (trace_.horizon < cfg_.episode_length)
      throw ConfigError("trace horizon shorter than episode_length");
    if (power_.horizon() < cfg_.episode_length)
      throw ConfigError("power horizon shorter than episode_length");
    for (std::size_t i = 1; i < trace_.jobs.size(); ++i)
      if (trace_.jobs[i].arrival < trace_.jobs[i - 1].arrival)
        throw ConfigError("trace arrivals must be nondecreasing");
    duration_scale_ = 1.0;
    value_scale_ = 1.0;
    for (const Job& job : trace_.jobs) {
      duration_scale_ = std::max(duration_scale_, static_cast<double>(job.duration));
      value_scale_ = std::max(value_scale_, job.value);
    }
    reset();
  }

  Observation reset() {
    state_ = ClusterState{};
    state_.ready_pool.assign(static_cast<std::size_t>(cfg_.ready_slots), std::nullopt);
    state_.battery = pcfg_.battery;
    stats_ = OnlineStats{};
    next_arrival_ = 0;
    auto [nodes, battery] = available_nodes(pcfg_, state_.battery, power_.at(0));
    state_.nodes_on = nodes;
    state_.battery = battery;
    admit_arrivals();
    promote_waiting();
    return encode_observation();
  }

  // Action i < M schedules ready slot i now; i == M is a no-op that ends the
  // tick. Invalid actions behave as no-ops and are flagged in info.
  StepOutcome step(int action) {
    const int noop = cfg_.ready_slots;
    if (action < 0 || action > noop)
      throw ConfigError("action index out of range");
    StepOutcome out;
    out.info.events_begin = state_.event_log.size();
    const auto mask = valid_actions();
    const bool valid = mask[static_cast<std::size_t>(action)];
    const bool schedule = action != noop && valid &&
                          state_.decisions_taken < cfg_.decision_budget();
    out.info.invalid_action = action != noop && !valid;
    if (schedule) {
      place_job(static_cast<std::size_t>(action));
      ++state_.decisions_taken;
    } else {
      advance_clock(out);
    }
    out.done = state_.clock >= cfg_.episode_length;
    out.info.advanced_clock = !schedule;
    out.info.events_end = state_.event_log.size();
    out.info.valid_mask = valid_actions();
    out.observation = encode_observation();
    return out;
  }

  // Slot i is valid iff a contiguous block of req free nodes exists at the
  // current tick. A count-only rule would announce placements that
  // fragmentation then rejects.
  std::vector<bool> valid_actions() const {
    std::vector<bool> mask(static_cast<std::size_t>(cfg_.ready_slots) + 1, false);
    mask.back() = true;  // no-op
    for (std::size_t i = 0; i < state_.ready_pool.size(); ++i) {
      const auto& slot = state_.ready_pool[i];
      if (slot && find_contiguous(slot->req) >= 0) mask[i] = true;
    }
    return mask;
  }

  // Layout: R_max*T occupancy bits, T availability-forecast fractions,
  // M five-field job descriptors, 1 normalized waiting-count scalar.
  Observation encode_observation() const {
    const int rmax = cfg_.max_nodes;
    const int window = cfg_.horizon_window;
    const int slots = cfg_.ready_slots;
    Observation obs;
    obs.reserve(static_cast<std::size_t>(rmax * window + window + 5 * slots + 1));
    // Occupancy image, row 0 = now; a running job fills its node block for
    // its remaining duration.
    std::vector<double> grid(static_cast<std::size_t>(rmax * window), 0.0);
    for (const RunningJob& r : state_.running) {
      const Tick rows = std::min<Tick>(r.job.remaining(), window);
      for (Tick t = 0; t < rows; ++t)
        for (int n = r.start_node; n < r.start_node + r.job.req; ++n)
          grid[static_cast<std::size_t>(t * rmax + n)] = 1.0;
    }
    obs.insert(obs.end(), grid.begin(), grid.end());
    // Availability forecast: project the battery greedily along the known
    // power trace.
    BatteryState battery = state_.battery;
    for (int t = 0; t < window; ++t) {
      if (t == 0) {
        obs.push_back(static_cast<double>(state_.nodes_on) / rmax);
        continue;
      }
      auto [nodes, next] = available_nodes(pcfg_, battery, power_.at(state_.clock + t));
      battery = next;
      obs.push_back(static_cast<double>(nodes) / rmax);
    }
    for (const auto& slot : state_.ready_pool) {
      if (!slot) {
        obs.insert(obs.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
        continue;
      }
      obs.push_back(clamp01(static_cast<double>(slot->req) / rmax));
      obs.push_back(clamp01(static_cast<double>(slot->remaining()) / duration_scale_));
      obs.push_back(clamp01(slot->value / value_scale_));
      obs.push_back(clamp01(slot->qos));
      obs.push_back(clamp01(static_cast<double>(state_.clock - slot->arrival) / window));
    }
    const double wait_norm = cfg_.wait_capacity > 0
                                 ? static_cast<double>(cfg_.wait_capacity)
                                 : 10.0 * slots;
    obs.push_back(clamp01(static_cast<double>(state_.wait_pool.size()) / wait_norm));
    return obs;
  }

  int observation_size() const {
    return cfg_.max_nodes * cfg_.horizon_window + cfg_.horizon_window +
           5 * cfg_.ready_slots + 1;
  }

  int action_count() const { return cfg_.ready_slots + 1; }

  const ClusterState& state() const { return state_; }
  const OnlineStats& stats() const { return stats_; }
  const EnvConfig& config() const { return cfg_; }
  const JobTrace& trace() const { return trace_; }
  const PowerTrace& power() const { return power_; }
  const PowerModelConfig& power_config() const { return pcfg_; }
  std::uint64_t seed() const { return seed_; }
  bool done() const { return state_.clock >= cfg_.episode_length; }

 private:
  // Lowest-index contiguous block of `req` free powered nodes, or -1.
  int find_contiguous(int req) const {
    if (req > state_.nodes_on) return -1;
    std::vector<bool> free(static_cast<std::size_t>(state_.nodes_on), true);
    for (const RunningJob& r : state_.running)
      for (int n = r.start_node; n < r.start_node + r.job.req; ++n)
        if (n < state_.nodes_on) free[static_cast<std::size_t>(n)] = false;
    int run = 0;
    for (int n = 0; n < state_.nodes_on; ++n) {
      run = free[static_cast<std::size_t>(n)] ? run + 1 : 0;
      if (run >= req) return n - req + 1;
    }
    return -1;
  }

  void place_job(std::size_t slot) {
    Job job = *state_.ready_pool[slot];
    const int start = find_contiguous(job.req);
    job.state = JobState::running;
    state_.ready_pool[slot].reset();
    state_.running.push_back({job, start});
    log(EventKind::schedule, job.id, static_cast<double>(start));
  }

  void log(EventKind kind, std::int64_t job_id, double detail) {
    state_.event_log.push_back({state_.clock, kind, job_id, detail});
  }

  void admit_arrivals() {
    while (next_arrival_ < trace_.jobs.size() &&
           trace_.jobs[next_arrival_].arrival == state_.clock) {
      Job job = trace_.jobs[next_arrival_++];
      const bool admitted =
          cfg_.wait_capacity < 0 ||
          static_cast<int>(state_.wait_pool.size()) < cfg_.wait_capacity;
      ++stats_.submitted;
      stats_.submitted_value += job.value;
      log(EventKind::arrival, job.id, admitted ? 1.0 : 0.0);
      if (admitted) {
        job.state = JobState::waiting;
        state_.wait_pool.push_back(job);
      }
    }
  }

  void promote_waiting() {
    for (auto& slot : state_.ready_pool) {
      if (state_.wait_pool.empty()) break;
      if (slot) continue;
      Job job = state_.wait_pool.front();
      state_.wait_pool.pop_front();
      job.state = JobState::ready;
      slot = job;
    }
  }

  // Most attained service first, ties broken toward the higher id.
  void preempt_to_fit() {
    auto victim = [&]() {
      std::size_t best = 0;
      for (std::size_t i = 1; i < state_.running.size(); ++i) {
        const Job& a = state_.running[i].job;
        const Job& b = state_.running[best].job;
        if (a.progress > b.progress ||
            (a.progress == b.progress && a.id > b.id))
          best = i;
      }
      return best;
    };
    bool preempted = false;
    while (state_.nodes_in_use() > state_.nodes_on) {
      const std::size_t i = victim();
      Job job = state_.running[i].job;
      state_.running.erase(state_.running.begin() + static_cast<std::ptrdiff_t>(i));
      job.state = JobState::suspended;
      log(EventKind::suspend, job.id, static_cast<double>(job.progress));
      // Suspended work re-enters ahead of newer arrivals.
      bool placed = false;
      for (auto& slot : state_.ready_pool) {
        if (!slot) {
          job.state = JobState::ready;
          slot = job;
          placed = true;
          break;
        }
      }
      if (!placed) state_.wait_pool.push_front(job);
      preempted = true;
    }
    // Survivors may sit on powered-off nodes; compact them to low indices.
    bool overlap = false;
    for (const RunningJob& r : state_.running)
      if (r.start_node + r.job.req > state_.nodes_on) overlap = true;
    if (overlap || preempted) {
      std::sort(state_.running.begin(), state_.running.end(),
                [](const RunningJob& a, const RunningJob& b) {
                  return a.start_node < b.start_node;
                });
      int next = 0;
      for (RunningJob& r : state_.running) {
        r.start_node = next;
        next += r.job.req;
      }
    }
  }

  void advance_clock(StepOutcome& out) {
    state_.decisions_taken = 0;
    stats_.usage_ticks += state_.nodes_in_use();
    state_.clock += 1;
    // Jobs that ran through the elapsed tick accrue service and dense reward.
    double reward = 0.0;
    for (auto it = state_.running.begin(); it != state_.running.end();) {
      Job& job = it->job;
      job.progress += 1;
      reward += job.value / static_cast<double>(job.duration);
      if (job.progress == job.duration) {
        job.state = JobState::finished;
        job.finish_time = state_.clock;
        log(EventKind::finish, job.id, job.value);
        ++stats_.finished;
        stats_.finished_value += job.value;
        it = state_.running.erase(it);
      } else {
        ++it;
      }
    }
    // Power for the new tick, then shrink-to-fit.
    auto [nodes, battery] = available_nodes(pcfg_, state_.battery, power_.at(state_.clock));
    state_.nodes_on = nodes;
    state_.battery = battery;
    preempt_to_fit();
    if (state_.clock < cfg_.episode_length) {
      admit_arrivals();
      promote_waiting();
    }
    // Cost: one unit per unfinished job past its deadline at the new clock.
    double cost = 0.0;
    auto delayed = [&](const Job& job) {
      if (state_.clock > qos_deadline(job)) {
        log(EventKind::delay_tick, job.id, 1.0);
        cost += 1.0;
      }
    };
    for (const Job& job : state_.wait_pool) delayed(job);
    for (const auto& slot : state_.ready_pool)
      if (slot) delayed(*slot);
    for (const RunningJob& r : state_.running) delayed(r.job);
    reward -= cfg_.delay_penalty * cost;
    out.reward = reward;
    out.cost = cost;
    stats_.reward_sum += reward;
    stats_.cost_sum += cost;
  }

  EnvConfig cfg_;
  JobTrace trace_;
  PowerTrace power_;
  PowerModelConfig pcfg_;
  std::uint64_t seed_;
  ClusterState state_;
  OnlineStats stats_;
  std::size_t next_arrival_ = 0;
  double duration_scale_ = 1.0;
  double value_scale_ = 1.0;
};

}  // namespace cocosched
