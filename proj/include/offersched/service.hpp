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

#ifndef OFFERSCHED_SERVICE_HPP
#define OFFERSCHED_SERVICE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "offersched/cluster.hpp"
#include "offersched/events.hpp"
#include "offersched/master.hpp"
#include "offersched/resources.hpp"

namespace offersched {

enum class ConstraintOp { Unique, Cluster, Like };

std::string toString(ConstraintOp op);

// A placement rule over an agent attribute, or over the reserved field
// "hostname" which resolves to the agent id.
struct Constraint {
  std::string field;
  ConstraintOp op = ConstraintOp::Unique;
  std::string value; // empty for UNIQUE

  bool operator==(const Constraint&) const = default;
};

struct VolumeSpec {
  std::string hostPath;
  std::string containerPath;

  bool operator==(const VolumeSpec&) const = default;
};

struct HealthCheckSpec {
  SimTime interval = seconds(10);
  int threshold = 3;

  bool operator==(const HealthCheckSpec&) const = default;
};

struct AppDefinition {
  std::string id;
  int instances = 1;
  ResourceVector request; // per instance
  std::optional<std::string> containerImage;
  std::vector<int> ports;
  std::vector<VolumeSpec> volumes;
  std::vector<Constraint> constraints;
  std::optional<HealthCheckSpec> healthCheck;

  bool operator==(const AppDefinition&) const = default;
};

// Strict parser: unknown keys are rejected, defaults are instances=1,
// ports=[], constraints=[], cpus=1, mem=128.
AppDefinition parseAppDefinition(const std::string& text);
AppDefinition appFromJson(const nlohmann::json& doc);

// Minimal anchored pattern language: top-level `|` alternation of branches,
// each branch literal text with `*` matching any (possibly empty) substring.
bool likeMatch(const std::string& pattern, const std::string& value);

// True iff the candidate satisfies every constraint given the agents that
// already host an instance of the app. Throws UnknownFieldError when a
// CLUSTER or LIKE constraint names an attribute the candidate lacks; UNIQUE
// over a missing attribute compares against the empty string.
bool evaluateConstraints(const AppDefinition& app, const AgentSpec& candidate,
                         const std::vector<AgentSpec>& placed);

struct DeploymentRecord {
  int version = 0;
  SimTime at = 0;
  AppDefinition definition;
};

struct ServiceInstance {
  TaskId taskId;
  AgentId agentId;
  uint64_t seq = 0; // launch order within the app, newest = highest
  TaskState state = TaskState::Staging;
  std::vector<PortMapping> ports;
  int consecutiveFailures = 0;
  SimTime nextProbeAt = -1;
};

struct Endpoint {
  std::string appId;
  std::string hostname;
  int port = 0;

  auto operator<=>(const Endpoint&) const = default;
};

// Long-running-service orchestrator: keeps desired app definitions with a
// versioned history, fills instance deficits from offers, restarts dead
// instances, and exposes live endpoints for discovery.
class ServiceFramework : public FrameworkHandle {
 public:
  ServiceFramework(FrameworkId id, Cluster& cluster, EventLog& log,
                   TaskOps& taskOps);

  int deploy(const AppDefinition& definition, SimTime now);
  int scale(const std::string& appId, int instances, SimTime now);
  int rollback(const std::string& appId, int version, SimTime now);

  bool hasApp(const std::string& appId) const;
  const AppDefinition& definition(const std::string& appId) const;
  int version(const std::string& appId) const;
  const std::vector<DeploymentRecord>& history(const std::string& appId) const;
  std::vector<std::string> appIds() const; // oldest-deployed first
  const std::vector<ServiceInstance>& instances(const std::string& appId) const;
  int liveCount(const std::string& appId) const;   // Staging + Running
  int runningCount(const std::string& appId) const;

  std::vector<Endpoint> endpoints() const;

  // Periodic probes auto-pass; failures enter through reportHealth (the
  // simulation has no real probe traffic to observe).
  void runHealthChecks(SimTime now);
  void reportHealth(const TaskId& taskId, bool healthy, SimTime now);

  // Lowest-seq Running instance of the app, if any; used for fault injection.
  std::optional<TaskId> pickVictim(const std::string& appId) const;

  const FrameworkId& id() const override { return id_; }
  const std::string& name() const override { return name_; }
  bool wantsOffers() const override;
  std::optional<OfferResponse> onOffer(const Offer& offer,
                                       SimTime now) override;
  void onTaskRunning(const TaskRecord& task, SimTime now) override;
  void onTaskTerminal(const TaskRecord& task, SimTime now) override;

 private:
  struct ManagedApp {
    AppDefinition def;
    int version = 0;
    uint64_t createdSeq = 0;
    uint64_t instanceCounter = 0;
    std::vector<ServiceInstance> instances;
    std::vector<DeploymentRecord> history;
  };

  ManagedApp& managed(const std::string& appId);
  const ManagedApp& managed(const std::string& appId) const;
  void killInstances(ManagedApp& app, const std::vector<TaskId>& taskIds,
                     SimTime now);
  int deficit(const ManagedApp& app) const;
  std::string taskPrefix(const std::string& appId);

  FrameworkId id_;
  std::string name_;
  Cluster& cluster_;
  EventLog& log_;
  TaskOps& taskOps_;
  std::map<std::string, ManagedApp> apps_;
  std::map<TaskId, std::string> taskToApp_;
  std::map<std::string, std::string> prefixOwner_; // task prefix -> app id
  uint64_t appCounter_ = 0;
};

} // namespace offersched

#endif // OFFERSCHED_SERVICE_HPP
