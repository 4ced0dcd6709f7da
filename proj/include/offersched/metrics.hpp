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

#ifndef OFFERSCHED_METRICS_HPP
#define OFFERSCHED_METRICS_HPP

#include <cstdint>
#include <map>
#include <string>

#include "offersched/events.hpp"
#include "offersched/resources.hpp"

namespace offersched {

// Nearest rank percentiles over started_at - submitted_at, in milliseconds.
// A group with submissions but no starts keeps count 0 and zeroed quantiles.
struct LatencyStats {
  int64_t count = 0;
  SimTime p50Ms = 0;
  SimTime p90Ms = 0;
  SimTime maxMs = 0;

  friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

struct MetricsReport {
  // Time integral of allocated over time integral of alive capacity, per
  // resource; 0 when the denominator is empty.
  double cpuUtil = 0.0;
  double memUtil = 0.0;

  int64_t buildsDone = 0;

  int64_t offersIssued = 0;
  int64_t offersAccepted = 0;
  int64_t offersDeclined = 0;
  int64_t offersExpired = 0;
  int64_t offersRescinded = 0;

  // Leader elections beyond the initial one.
  int64_t failovers = 0;

  // perKind always carries release, ib, and pr-test; perLabel carries every
  // queue label seen in a job_submitted record.
  std::map<std::string, LatencyStats> perKind;
  std::map<std::string, LatencyStats> perLabel;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Pure function of the log: recomputing on a replayed log yields an identical
// report. Requires exactly one sim_started and one sim_ended record; throws
// MalformedLogError otherwise, or when records reference unknown ids.
MetricsReport computeMetrics(const EventLog& log);

// "metric,value" rows in a frozen order; utilizations with 6 decimals.
std::string metricsToCsv(const MetricsReport& report);

// Same rows as the csv, one {"metric":...,"value":...} object per line.
std::string metricsToNdjson(const MetricsReport& report);

// Human readable digest; not a stable machine interface.
std::string summaryText(const MetricsReport& report);

} // namespace offersched

#endif // OFFERSCHED_METRICS_HPP
