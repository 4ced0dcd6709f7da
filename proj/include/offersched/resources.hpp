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

#ifndef OFFERSCHED_RESOURCES_HPP
#define OFFERSCHED_RESOURCES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "offersched/errors.hpp"

namespace offersched {

// Simulation time in integer milliseconds.
using SimTime = int64_t;

constexpr SimTime seconds(int64_t s) { return s * 1000; }

using AgentId = std::string;
using TaskId = std::string;
using FrameworkId = std::string;
using OfferId = std::string;
using JobId = std::string;
using BuilderId = std::string;

// cpus are stored in millicores, mem and disk in tenths of a MiB. Tenth-MiB
// granularity keeps fleet sums like 71 x 7782.4 MiB exact; every arithmetic
// op below is integer arithmetic so conservation checks never drift.
class ResourceVector {
 public:
  static constexpr int64_t kCpuScale = 1000; // millicores per core
  static constexpr int64_t kMemScale = 10;   // units per MiB

  constexpr ResourceVector() = default;

  static ResourceVector fromUnits(
      int64_t millicores,
      int64_t memTenths,
      int64_t diskTenths = 0);

  // Decimal cores / MiB. Throws ValidationError when a value is negative or
  // not representable at the fixed-point granularity.
  static ResourceVector of(double cpus, double memMiB, double diskMiB = 0);

  int64_t millicores() const { return cpus_; }
  int64_t memTenths() const { return mem_; }
  int64_t diskTenths() const { return disk_; }

  double cpus() const { return static_cast<double>(cpus_) / kCpuScale; }
  double memMiB() const { return static_cast<double>(mem_) / kMemScale; }
  double diskMiB() const { return static_cast<double>(disk_) / kMemScale; }

  bool contains(const ResourceVector& other) const {
    return cpus_ >= other.cpus_ && mem_ >= other.mem_ && disk_ >= other.disk_;
  }

  bool empty() const { return cpus_ == 0 && mem_ == 0 && disk_ == 0; }

  ResourceVector& operator+=(const ResourceVector& other);

  // Throws UnderflowError when any component would go negative.
  ResourceVector& operator-=(const ResourceVector& other);

  friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) {
    a += b;
    return a;
  }

  friend ResourceVector operator-(ResourceVector a, const ResourceVector& b) {
    a -= b;
    return a;
  }

  friend bool operator==(const ResourceVector&, const ResourceVector&) =
      default;

  // "cpus=4 mem=7782.4 disk=0"
  std::string toString() const;

  // {"cpus":"4","mem":"7782.4","disk":"0"} -- decimal strings so that log
  // round trips are byte exact.
  nlohmann::json toJson() const;
  static ResourceVector fromJson(const nlohmann::json& j);

 private:
  ResourceVector(int64_t cpus, int64_t mem, int64_t disk)
    : cpus_(cpus), mem_(mem), disk_(disk) {}

  int64_t cpus_ = 0;
  int64_t mem_ = 0;
  int64_t disk_ = 0;
};

// Render a fixed-point quantity as a trimmed decimal string ("2.5", "4096").
std::string formatFixed(int64_t value, int64_t scale);

// Exact inverse of formatFixed; throws ValidationError on bad input.
int64_t parseFixed(const std::string& text, int64_t scale);

// Named string labels on an agent (os flavor, data locality, zone...).
// std::map so iteration order, and therefore every log payload, is stable.
using AttributeSet = std::map<std::string, std::string>;

// True iff every required name/value pair is present and equal.
bool attrsSatisfy(
    const AttributeSet& agent,
    const std::map<std::string, std::string>& required);

struct AgentSpec {
  AgentId id;
  ResourceVector total;
  AttributeSet attributes;
  std::string zone;
};

enum class TaskState { Staging, Running, Finished, Failed, Killed, Lost };

enum class TaskEvent { Launched, Completed, Failed, Kill, AgentLost };

std::string toString(TaskState state);
const char* toString(TaskEvent event);

bool isTerminal(TaskState state);

// Pure state machine step: Staging -> Running -> {Finished,Failed,Killed},
// any non-terminal state -> Lost on agent death. Throws
// IllegalTransitionError for anything else.
TaskState nextTaskState(TaskState current, TaskEvent event);

struct PortMapping {
  int containerPort = 0;
  int hostPort = 0;

  friend bool operator==(const PortMapping&, const PortMapping&) = default;
};

struct TaskRecord {
  TaskId id;
  FrameworkId frameworkId;
  AgentId agentId;
  ResourceVector request;
  std::optional<std::string> containerImage;
  std::vector<PortMapping> ports;
  std::string payload;
  TaskState state = TaskState::Staging;
  SimTime stagedAt = -1;
  SimTime startedAt = -1;
  SimTime endedAt = -1;
};

// Host port counter per agent: lowest free port >= 31000 first, freed ports
// are recycled.
class PortPool {
 public:
  static constexpr int kBasePort = 31000;

  int allocate();
  void release(int port);
  void reset() { inUse_.clear(); }

 private:
  std::set<int> inUse_;
};

struct AgentState {
  AgentSpec spec;
  ResourceVector allocated;
  ResourceVector offered;
  std::set<TaskId> tasks; // non-terminal tasks placed here
  bool alive = true;
  PortPool ports;

  ResourceVector free() const {
    ResourceVector f = spec.total;
    f -= allocated;
    f -= offered;
    return f;
  }
};

} // namespace offersched

#endif // OFFERSCHED_RESOURCES_HPP
