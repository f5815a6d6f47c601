#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cocosched/rng.hpp"
#include "cocosched/util.hpp"

namespace cocosched {

enum class JobState { waiting, ready, running, suspended, finished };

struct Job {
  std::int64_t id = 0;
  Tick arrival = 0;
  Tick duration = 1;   // service ticks required
  int req = 1;         // nodes requested
  double qos = 1.0;    // fraction in (0, 1]
  double value = 0.0;  // currency units
  JobState state = JobState::waiting;
  Tick progress = 0;   // ticks serviced so far
  std::optional<Tick> finish_time;

  Tick remaining() const { return duration - progress; }
};

struct WorkloadConfig {
  double arrival_rate = 0.5;      // expected jobs per timestep
  double short_fraction = 0.7;
  Tick short_duration_min = 1, short_duration_max = 3;
  Tick long_duration_min = 4, long_duration_max = 10;
  int req_min = 1, req_max = 3;
  std::vector<double> qos_choices = {0.25, 0.5, 0.75, 1.0};
  Tick horizon = 1000;
};

struct JobTrace {
  std::vector<Job> jobs;  // sorted by arrival, ids unique
  Tick horizon = 0;
};

// value = req * duration * (1 + qos); monotone in each argument.
inline double job_value(int req, Tick duration, double qos) {
  return static_cast<double>(req) * static_cast<double>(duration) * (1.0 + qos);
}

// Deadline relative to arrival: arrival + ceil(duration / qos). A small slack
// keeps exact ratios (e.g. 3 / 0.3) from rounding up due to float error.
inline Tick qos_deadline(const Job& job) {
  const double ratio = static_cast<double>(job.duration) / job.qos;
  return job.arrival + static_cast<Tick>(std::ceil(ratio - 1e-9));
}

inline void validate(const WorkloadConfig& cfg) {
  if (cfg.arrival_rate < 0)
    throw ConfigError("workload.arrival_rate must be >= 0");
  if (cfg.short_fraction < 0 || cfg.short_fraction > 1)
    throw ConfigError("workload.short_fraction must be in [0,1]");
  if (cfg.short_duration_min < 1 || cfg.short_duration_min > cfg.short_duration_max)
    throw ConfigError("workload.short_duration range invalid");
  if (cfg.long_duration_min < 1 || cfg.long_duration_min > cfg.long_duration_max)
    throw ConfigError("workload.long_duration range invalid");
  if (cfg.req_min < 1 || cfg.req_min > cfg.req_max)
    throw ConfigError("workload.req range invalid");
  if (cfg.qos_choices.empty()) throw ConfigError("workload.qos_choices empty");
  for (double q : cfg.qos_choices)
    if (!(q > 0.0 && q <= 1.0))
      throw ConfigError("workload.qos_choices entries must be in (0,1]");
  if (cfg.horizon < 0) throw ConfigError("workload.horizon must be >= 0");
}

inline void validate(const Job& job, const std::string& where) {
  if (job.duration < 1) throw ParseError(where + ": duration must be >= 1");
  if (job.req < 1) throw ParseError(where + ": req must be >= 1");
  if (!(job.qos > 0.0 && job.qos <= 1.0))
    throw ParseError(where + ": qos must be in (0,1]");
  if (job.value < 0) throw ParseError(where + ": value must be >= 0");
  if (job.arrival < 0) throw ParseError(where + ": arrival must be >= 0");
  if (job.progress < 0 || job.progress > job.duration)
    throw ParseError(where + ": progress out of range");
}

// Per timestep, floor(rate) jobs arrive plus a Bernoulli remainder, so a rate
// of 0.5 means a job every other step on average and rates above 1 fan out.
inline JobTrace generate_synthetic(const WorkloadConfig& cfg,
                                   std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  JobTrace trace;
  trace.horizon = cfg.horizon;
  std::int64_t next_id = 1;
  const auto whole = static_cast<std::int64_t>(std::floor(cfg.arrival_rate));
  const double remainder = cfg.arrival_rate - static_cast<double>(whole);
  for (Tick t = 0; t < cfg.horizon; ++t) {
    std::int64_t count = whole + (rng.bernoulli(remainder) ? 1 : 0);
    for (std::int64_t k = 0; k < count; ++k) {
      Job job;
      job.id = next_id++;
      job.arrival = t;
      const bool is_short = rng.bernoulli(cfg.short_fraction);
      job.duration = is_short
                         ? rng.uniform_int(cfg.short_duration_min, cfg.short_duration_max)
                         : rng.uniform_int(cfg.long_duration_min, cfg.long_duration_max);
      job.req = static_cast<int>(rng.uniform_int(cfg.req_min, cfg.req_max));
      job.qos = cfg.qos_choices[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(cfg.qos_choices.size()) - 1))];
      job.value = job_value(job.req, job.duration, job.qos);
      trace.jobs.push_back(job);
    }
  }
  return trace;
}

inline constexpr const char* kTraceHeader = "job_id,arrival,duration,req,qos,value";

// CSV with header job_id,arrival,duration,req,qos[,value]; the value column
// is computed from job_value when absent. '#' lines are ignored.
inline JobTrace parse_trace(std::istream& in) {
  JobTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  Tick prev_arrival = 0;
  std::vector<std::int64_t> seen_ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# horizon=", 0) == 0) {
      trace.horizon = parse_int(trim(line.substr(10)),
                                "line " + std::to_string(lineno) + " horizon");
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      auto cols = split(line, ',');
      if (cols.size() < 5 || cols[0] != "job_id" || cols[1] != "arrival" ||
          cols[2] != "duration" || cols[3] != "req" || cols[4] != "qos")
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected trace header '" + std::string(kTraceHeader) + "'");
      saw_header = true;
      continue;
    }
    auto cols = split(line, ',');
    if (cols.size() != 5 && cols.size() != 6)
      throw ParseError("line " + std::to_string(lineno) + ": expected 5 or 6 columns");
    const std::string where = "line " + std::to_string(lineno);
    Job job;
    job.id = parse_int(cols[0], where + " job_id");
    job.arrival = parse_int(cols[1], where + " arrival");
    job.duration = parse_int(cols[2], where + " duration");
    job.req = static_cast<int>(parse_int(cols[3], where + " req"));
    job.qos = parse_double(cols[4], where + " qos");
    job.value = cols.size() == 6 ? parse_double(cols[5], where + " value")
                                 : job_value(job.req, job.duration, job.qos);
    validate(job, where + " job " + std::to_string(job.id));
    if (!trace.jobs.empty() && job.arrival < prev_arrival)
      throw ParseError(where + ": arrivals must be nondecreasing");
    prev_arrival = job.arrival;
    seen_ids.push_back(job.id);
    trace.jobs.push_back(job);
    trace.horizon = std::max(trace.horizon, job.arrival + 1);
  }
  std::sort(seen_ids.begin(), seen_ids.end());
  if (std::adjacent_find(seen_ids.begin(), seen_ids.end()) != seen_ids.end())
    throw ParseError("duplicate job ids in trace");
  return trace;
}

inline JobTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

inline std::string serialize_trace(const JobTrace& trace) {
  std::string out = "# horizon=" + std::to_string(trace.horizon) + "\n";
  out += kTraceHeader;
  out += '\n';
  for (const Job& job : trace.jobs) {
    out += std::to_string(job.id);
    out += ',';
    out += std::to_string(job.arrival);
    out += ',';
    out += std::to_string(job.duration);
    out += ',';
    out += std::to_string(job.req);
    out += ',';
    out += dtos(job.qos);
    out += ',';
    out += dtos(job.value);
    out += '\n';
  }
  return out;
}

}  // namespace cocosched
