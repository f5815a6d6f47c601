#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cocosched/simenv.hpp"
#include "cocosched/util.hpp"
#include "cocosched/workload.hpp"

namespace cocosched {

struct MetricsReport {
  double value_ratio = 0.0;       // finished value / submitted value
  double completion_ratio = 0.0;  // finished / submitted
  double utilization = 0.0;       // mean nodes-in-use / R_max over the episode
  double accrued_cost = 0.0;      // total delayed-job ticks
  std::int64_t submitted = 0;
  std::int64_t finished = 0;
};

// Recompute the report by replaying the event log against the trace. Vacuous
// ratios (nothing submitted) read as 1.0.
inline MetricsReport summarize(const EventLog& log, const JobTrace& trace,
                               const EnvConfig& cfg) {
  std::unordered_map<std::int64_t, const Job*> by_id;
  by_id.reserve(trace.jobs.size());
  for (const Job& job : trace.jobs) by_id[job.id] = &job;

  auto bad = [](const Event& e, const std::string& why) {
    return IntegrityError("inconsistent log at tick " + std::to_string(e.tick) +
                          " event " + event_name(e.kind) + " job " +
                          std::to_string(e.job_id) + ": " + why);
  };

  MetricsReport report;
  double submitted_value = 0.0, finished_value = 0.0;
  std::int64_t usage_ticks = 0;
  std::unordered_map<std::int64_t, Tick> open_run;  // job id -> schedule tick
  std::unordered_map<std::int64_t, int> lifecycle;  // 0 seen, 1 running, 2 done
  for (const Event& e : log) {
    auto it = by_id.find(e.job_id);
    if (it == by_id.end()) throw bad(e, "job id not in trace");
    const Job& job = *it->second;
    switch (e.kind) {
      case EventKind::arrival:
        if (lifecycle.count(e.job_id)) throw bad(e, "duplicate arrival");
        lifecycle[e.job_id] = 0;
        ++report.submitted;
        submitted_value += job.value;
        break;
      case EventKind::schedule: {
        auto st = lifecycle.find(e.job_id);
        if (st == lifecycle.end()) throw bad(e, "schedule before arrival");
        if (st->second == 1) throw bad(e, "schedule while already running");
        if (st->second == 2) throw bad(e, "schedule after finish");
        st->second = 1;
        open_run[e.job_id] = e.tick;
        break;
      }
      case EventKind::suspend: {
        auto run = open_run.find(e.job_id);
        if (run == open_run.end()) throw bad(e, "suspend while not running");
        usage_ticks += (e.tick - run->second) * job.req;
        open_run.erase(run);
        lifecycle[e.job_id] = 0;
        break;
      }
      case EventKind::finish: {
        auto run = open_run.find(e.job_id);
        if (run == open_run.end()) throw bad(e, "finish while not running");
        usage_ticks += (e.tick - run->second) * job.req;
        open_run.erase(run);
        lifecycle[e.job_id] = 2;
        ++report.finished;
        finished_value += job.value;
        break;
      }
      case EventKind::delay_tick:
        report.accrued_cost += e.detail;
        break;
    }
  }
  for (const auto& [id, start] : open_run)
    usage_ticks += (cfg.episode_length - start) * by_id.at(id)->req;
  report.value_ratio =
      report.submitted ? finished_value / submitted_value : 1.0;
  report.completion_ratio =
      report.submitted
          ? static_cast<double>(report.finished) / static_cast<double>(report.submitted)
          : 1.0;
  report.utilization = static_cast<double>(usage_ticks) /
                       (static_cast<double>(cfg.episode_length) * cfg.max_nodes);
  return report;
}

struct ReportRow {
  std::string policy;
  double arrival_rate = 0.0;
  std::uint64_t seed = 0;
  MetricsReport report;
};

inline constexpr const char* kReportHeader =
    "policy,arrival_rate,seed,value_ratio,completion_ratio,utilization,"
    "accrued_cost";

inline std::string serialize_reports(const std::vector<ReportRow>& rows,
                                     const std::string& digest = {}) {
  std::string out;
  if (!digest.empty()) out += "# config " + digest + "\n";
  out += kReportHeader;
  out += '\n';
  for (const ReportRow& r : rows) {
    out += r.policy;
    out += ',';
    out += dtos(r.arrival_rate);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += dtos(r.report.value_ratio);
    out += ',';
    out += dtos(r.report.completion_ratio);
    out += ',';
    out += dtos(r.report.utilization);
    out += ',';
    out += dtos(r.report.accrued_cost);
    out += '\n';
  }
  return out;
}

inline std::vector<ReportRow> parse_reports(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kReportHeader)
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected report header '" + std::string(kReportHeader) + "'");
      saw_header = true;
      continue;
    }
    auto cols = split(line, ',');
    const std::string where = "line " + std::to_string(lineno);
    if (cols.size() != 7) throw ParseError(where + ": expected 7 columns");
    ReportRow r;
    r.policy = cols[0];
    r.arrival_rate = parse_double(cols[1], where + " arrival_rate");
    r.seed = parse_u64(cols[2], where + " seed");
    r.report.value_ratio = parse_double(cols[3], where + " value_ratio");
    r.report.completion_ratio = parse_double(cols[4], where + " completion_ratio");
    r.report.utilization = parse_double(cols[5], where + " utilization");
    r.report.accrued_cost = parse_double(cols[6], where + " accrued_cost");
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<ReportRow> parse_reports(const std::string& text) {
  std::istringstream in(text);
  return parse_reports(in);
}

}  // namespace cocosched
