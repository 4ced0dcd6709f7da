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

#ifndef OFFERSCHED_SCENARIO_HPP
#define OFFERSCHED_SCENARIO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "offersched/build.hpp"
#include "offersched/master.hpp"
#include "offersched/resources.hpp"
#include "offersched/service.hpp"

namespace offersched {

enum class Policy { Dynamic, Static };

std::string toString(Policy policy);

enum class FailureKind {
  AgentCrash,
  AgentRecover,
  MasterCrash,
  MasterRecover,
  TaskFail,
};

std::string toString(FailureKind kind);

struct FailureSpec {
  SimTime at = 0;
  FailureKind kind = FailureKind::AgentCrash;
  std::string target;
};

struct ArrivalSpec {
  enum class Type { Poisson, Timeline };
  Type type = Type::Timeline;
  double ratePerDay = 0.0;       // Poisson only
  std::vector<SimTime> timeline; // Timeline only, ascending
};

struct WorkloadSpec {
  std::string kind; // release, ib, or pr-test
  std::string label;
  SimTime duration = 0;
  ArrivalSpec arrivals;
};

struct Scenario {
  uint64_t seed = 0;
  SimTime duration = 0;
  std::vector<AgentSpec> agents;
  std::vector<MasterSpec> masters; // empty means the default 3-master group
  Policy policy = Policy::Dynamic;
  std::optional<std::map<std::string, std::vector<AgentId>>> staticMap;
  std::vector<QueueConfig> queues;
  std::vector<AppDefinition> apps;
  std::vector<WorkloadSpec> workload;
  std::vector<FailureSpec> failures;
  SimTime offerTtl = seconds(30);
  SimTime proxyPeriod = seconds(120);
};

// Strict JSON loader: schema mirrors Scenario field-for-field with camelCase
// keys and durations in seconds; unknown keys anywhere are errors.
Scenario parseScenario(const std::string& text);
Scenario loadScenarioFile(const std::string& path);

uint64_t fnv1a64(const std::string& text);

// A named RNG stream derived from the scenario seed; draws on one stream
// never perturb any other stream.
class RngStream {
 public:
  RngStream(uint64_t seed, const std::string& name)
    : gen_(seed ^ fnv1a64(name)) {}

  uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double nextUnit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Exponential inter-arrival gap in milliseconds, at least 1.
  SimTime nextExpGapMs(double ratePerMs);

 private:
  std::mt19937_64 gen_;
};

} // namespace offersched

#endif // OFFERSCHED_SCENARIO_HPP
