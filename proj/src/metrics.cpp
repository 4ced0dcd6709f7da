// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "offersched/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "offersched/errors.hpp"

namespace offersched {

namespace {

// Nearest rank: the 1-based rank is ceil(pct/100 * n), computed in integers
// so borderline ranks never drift on floating point (0.9 * 10 != 9 exactly).
SimTime nearestRank(const std::vector<SimTime>& sorted, int64_t pct) {
  int64_t n = static_cast<int64_t>(sorted.size());
  int64_t rank = (pct * n + 99) / 100;
  return sorted[static_cast<size_t>(rank - 1)];
}

LatencyStats statsOf(std::vector<SimTime>& samples) {
  LatencyStats stats;
  stats.count = static_cast<int64_t>(samples.size());
  if (samples.empty()) {
    return stats;
  }
  std::sort(samples.begin(), samples.end());
  stats.p50Ms = nearestRank(samples, 50);
  stats.p90Ms = nearestRank(samples, 90);
  stats.maxMs = samples.back();
  return stats;
}

std::string requireString(const LogRecord& record, const std::string& key) {
  if (!record.payload.contains(key) || !record.payload.at(key).is_string()) {
    throw MalformedLogError(record.kind + " record (seq " +
                            std::to_string(record.seq) +
                            ") lacks string field " + key);
  }
  return record.payload.at(key).get<std::string>();
}

ResourceVector requireResources(const LogRecord& record,
                                const std::string& key) {
  if (!record.payload.contains(key)) {
    throw MalformedLogError(record.kind + " record (seq " +
                            std::to_string(record.seq) + ") lacks field " +
                            key);
  }
  try {
    return ResourceVector::fromJson(record.payload.at(key));
  } catch (const ValidationError& e) {
    throw MalformedLogError(record.kind + " record (seq " +
                            std::to_string(record.seq) + "): " + e.what());
  }
}

struct JobInfo {
  std::string kind;
  std::string label;
  SimTime submittedAt = 0;
  SimTime startedAt = -1;
};

} // namespace

MetricsReport computeMetrics(const EventLog& log) {
  SimTime startT = 0;
  SimTime endT = 0;
  int started = 0;
  int ended = 0;
  for (const LogRecord& record : log.records()) {
    if (record.kind == "sim_started") {
      started++;
      startT = record.t;
    } else if (record.kind == "sim_ended") {
      ended++;
      endT = record.t;
    }
  }
  if (started != 1 || ended != 1) {
    throw MalformedLogError("log must contain exactly one sim_started and one "
                            "sim_ended record");
  }
  if (endT < startT) {
    throw MalformedLogError("sim_ended precedes sim_started");
  }

  MetricsReport report;

  std::map<std::string, ResourceVector> agentTotal;
  std::map<std::string, bool> agentAlive;
  std::map<std::string, ResourceVector> taskRequest;
  std::map<std::string, JobInfo> jobs;

  // All quantities are fixed point units times milliseconds; the largest
  // bundled scenario stays far below the int64 range.
  int64_t aliveCpu = 0;
  int64_t aliveMem = 0;
  int64_t allocCpu = 0;
  int64_t allocMem = 0;
  int64_t aliveCpuMs = 0;
  int64_t aliveMemMs = 0;
  int64_t allocCpuMs = 0;
  int64_t allocMemMs = 0;
  int64_t elections = 0;
  SimTime prev = startT;

  for (const LogRecord& record : log.records()) {
    SimTime t = std::clamp(record.t, startT, endT);
    if (t > prev) {
      int64_t dt = t - prev;
      aliveCpuMs += aliveCpu * dt;
      aliveMemMs += aliveMem * dt;
      allocCpuMs += allocCpu * dt;
      allocMemMs += allocMem * dt;
      prev = t;
    }

    const std::string& kind = record.kind;
    if (kind == "agent_added") {
      std::string id = requireString(record, "agent");
      if (!agentTotal.emplace(id, requireResources(record, "total")).second) {
        throw MalformedLogError("agent " + id + " added twice");
      }
      agentAlive[id] = true;
      const ResourceVector& total = agentTotal.at(id);
      aliveCpu += total.millicores();
      aliveMem += total.memTenths();
    } else if (kind == "agent_crashed" || kind == "agent_recovered") {
      std::string id = requireString(record, "agent");
      auto it = agentTotal.find(id);
      if (it == agentTotal.end()) {
        throw MalformedLogError(kind + " for unknown agent " + id);
      }
      bool alive = kind == "agent_recovered";
      if (agentAlive[id] == alive) {
        throw MalformedLogError(kind + " for agent " + id +
                                " in that state already");
      }
      agentAlive[id] = alive;
      int64_t sign = alive ? 1 : -1;
      aliveCpu += sign * it->second.millicores();
      aliveMem += sign * it->second.memTenths();
    } else if (kind == "task_staged") {
      std::string id = requireString(record, "task");
      if (!taskRequest.emplace(id, requireResources(record, "request"))
               .second) {
        throw MalformedLogError("task " + id + " staged twice");
      }
      const ResourceVector& request = taskRequest.at(id);
      allocCpu += request.millicores();
      allocMem += request.memTenths();
    } else if (kind == "task_finished" || kind == "task_failed" ||
               kind == "task_killed" || kind == "task_lost") {
      std::string id = requireString(record, "task");
      auto it = taskRequest.find(id);
      if (it == taskRequest.end()) {
        throw MalformedLogError(kind + " for unknown task " + id);
      }
      allocCpu -= it->second.millicores();
      allocMem -= it->second.memTenths();
      taskRequest.erase(it);
    } else if (kind == "offer_issued") {
      report.offersIssued++;
    } else if (kind == "offer_accepted") {
      report.offersAccepted++;
    } else if (kind == "offer_declined") {
      report.offersDeclined++;
    } else if (kind == "offer_expired") {
      report.offersExpired++;
    } else if (kind == "offer_rescinded") {
      report.offersRescinded++;
    } else if (kind == "leader_elected") {
      elections++;
    } else if (kind == "job_submitted") {
      std::string id = requireString(record, "job");
      JobInfo info;
      info.kind = requireString(record, "kind");
      info.label = requireString(record, "label");
      info.submittedAt = record.t;
      if (!jobs.emplace(id, std::move(info)).second) {
        throw MalformedLogError("job " + id + " submitted twice");
      }
    } else if (kind == "job_started") {
      std::string id = requireString(record, "job");
      auto it = jobs.find(id);
      if (it == jobs.end()) {
        throw MalformedLogError("job_started for unknown job " + id);
      }
      if (it->second.startedAt >= 0) {
        throw MalformedLogError("job " + id + " started twice");
      }
      it->second.startedAt = record.t;
    } else if (kind == "job_finished") {
      report.buildsDone++;
    }
  }

  if (endT > prev) {
    int64_t dt = endT - prev;
    aliveCpuMs += aliveCpu * dt;
    aliveMemMs += aliveMem * dt;
    allocCpuMs += allocCpu * dt;
    allocMemMs += allocMem * dt;
  }

  report.cpuUtil = aliveCpuMs > 0
      ? static_cast<double>(allocCpuMs) / static_cast<double>(aliveCpuMs)
      : 0.0;
  report.memUtil = aliveMemMs > 0
      ? static_cast<double>(allocMemMs) / static_cast<double>(aliveMemMs)
      : 0.0;
  report.failovers = elections > 1 ? elections - 1 : 0;

  std::map<std::string, std::vector<SimTime>> byKind;
  std::map<std::string, std::vector<SimTime>> byLabel;
  byKind["release"];
  byKind["ib"];
  byKind["pr-test"];
  for (const auto& [id, info] : jobs) {
    byKind[info.kind];
    byLabel[info.label];
    if (info.startedAt >= 0) {
      SimTime latency = info.startedAt - info.submittedAt;
      byKind[info.kind].push_back(latency);
      byLabel[info.label].push_back(latency);
    }
  }
  for (auto& [kind, samples] : byKind) {
    report.perKind[kind] = statsOf(samples);
  }
  for (auto& [label, samples] : byLabel) {
    report.perLabel[label] = statsOf(samples);
  }
  return report;
}

namespace {

std::string formatUtil(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

// Row order is frozen; metrics.csv takes part in byte comparisons.
void forEachRow(
    const MetricsReport& report,
    const std::function<void(const std::string&, const std::string&)>& emit) {
  emit("cpu_util", formatUtil(report.cpuUtil));
  emit("mem_util", formatUtil(report.memUtil));
  emit("builds_done", std::to_string(report.buildsDone));
  emit("offers_issued", std::to_string(report.offersIssued));
  emit("offers_accepted", std::to_string(report.offersAccepted));
  emit("offers_declined", std::to_string(report.offersDeclined));
  emit("offers_expired", std::to_string(report.offersExpired));
  emit("offers_rescinded", std::to_string(report.offersRescinded));
  emit("failovers", std::to_string(report.failovers));
  for (const char* kind : {"release", "ib", "pr-test"}) {
    const LatencyStats& stats = report.perKind.at(kind);
    std::string k(kind);
    emit("count_" + k, std::to_string(stats.count));
    emit("p50_" + k + "_ms", std::to_string(stats.p50Ms));
    emit("p90_" + k + "_ms", std::to_string(stats.p90Ms));
    emit("max_" + k + "_ms", std::to_string(stats.maxMs));
  }
  for (const auto& [label, stats] : report.perLabel) {
    emit("count_label_" + label, std::to_string(stats.count));
    emit("p50_label_" + label + "_ms", std::to_string(stats.p50Ms));
    emit("p90_label_" + label + "_ms", std::to_string(stats.p90Ms));
    emit("max_label_" + label + "_ms", std::to_string(stats.maxMs));
  }
}

} // namespace

std::string metricsToCsv(const MetricsReport& report) {
  std::ostringstream out;
  out << "metric,value\n";
  forEachRow(report, [&out](const std::string& metric,
                            const std::string& value) {
    out << metric << "," << value << "\n";
  });
  return out.str();
}

std::string metricsToNdjson(const MetricsReport& report) {
  std::ostringstream out;
  forEachRow(report, [&out](const std::string& metric,
                            const std::string& value) {
    out << nlohmann::json{{"metric", metric}, {"value", value}}.dump() << "\n";
  });
  return out.str();
}

std::string summaryText(const MetricsReport& report) {
  std::ostringstream out;
  out << "cpu utilization: " << formatUtil(report.cpuUtil) << "\n"
      << "mem utilization: " << formatUtil(report.memUtil) << "\n"
      << "builds done: " << report.buildsDone << "\n"
      << "offers: issued=" << report.offersIssued
      << " accepted=" << report.offersAccepted
      << " declined=" << report.offersDeclined
      << " expired=" << report.offersExpired
      << " rescinded=" << report.offersRescinded << "\n"
      << "failovers: " << report.failovers << "\n";
  for (const char* kind : {"release", "ib", "pr-test"}) {
    const LatencyStats& stats = report.perKind.at(kind);
    out << "latency " << kind << ": count=" << stats.count;
    if (stats.count > 0) {
      out << " p50=" << stats.p50Ms << "ms p90=" << stats.p90Ms
          << "ms max=" << stats.maxMs << "ms";
    }
    out << "\n";
  }
  for (const auto& [label, stats] : report.perLabel) {
    out << "latency label " << label << ": count=" << stats.count;
    if (stats.count > 0) {
      out << " p50=" << stats.p50Ms << "ms p90=" << stats.p90Ms
          << "ms max=" << stats.maxMs << "ms";
    }
    out << "\n";
  }
  return out.str();
}

} // namespace offersched
