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

#include "offersched/verify.hpp"

#include <map>

#include "offersched/errors.hpp"

namespace offersched {

void verifyCluster(const Cluster& cluster, const Allocator& allocator,
                   size_t eventIndex) {
  std::map<AgentId, ResourceVector> offeredByAgent;
  std::map<AgentId, int> offersPerAgent;
  for (const auto& [id, offer] : allocator.outstandingOffers()) {
    offeredByAgent[offer.agentId] += offer.resources;
    offersPerAgent[offer.agentId]++;
  }

  std::map<FrameworkId, ResourceVector> taskSums;
  for (const auto& [agentId, state] : cluster.agents()) {
    ResourceVector committed = state.allocated;
    committed += state.offered;
    if (!state.spec.total.contains(committed)) {
      throw InvariantViolationError(
          "agent " + agentId + " allocated+offered " + committed.toString() +
          " exceeds total " + state.spec.total.toString(), eventIndex);
    }

    ResourceVector taskSum;
    for (const TaskId& taskId : state.tasks) {
      const TaskRecord& task = cluster.task(taskId);
      if (isTerminal(task.state)) {
        throw InvariantViolationError(
            "terminal task " + taskId + " still attached to agent " + agentId,
            eventIndex);
      }
      taskSum += task.request;
      taskSums[task.frameworkId] += task.request;
    }
    if (!(taskSum == state.allocated)) {
      throw InvariantViolationError(
          "agent " + agentId + " allocated " + state.allocated.toString() +
          " does not match task sum " + taskSum.toString(), eventIndex);
    }

    if (offersPerAgent.count(agentId) != 0 && offersPerAgent.at(agentId) > 1) {
      throw InvariantViolationError(
          "agent " + agentId + " has " +
          std::to_string(offersPerAgent.at(agentId)) +
          " outstanding offers; at most one is allowed", eventIndex);
    }
    ResourceVector offered = offeredByAgent.count(agentId) != 0
                                 ? offeredByAgent.at(agentId)
                                 : ResourceVector();
    if (!(offered == state.offered)) {
      throw InvariantViolationError(
          "agent " + agentId + " offered " + state.offered.toString() +
          " does not match outstanding offers " + offered.toString(),
          eventIndex);
    }
    if (!state.alive && (offersPerAgent.count(agentId) != 0 ||
                         !state.allocated.empty())) {
      throw InvariantViolationError(
          "dead agent " + agentId + " still holds offers or allocation",
          eventIndex);
    }
  }

  for (const FrameworkHandle* framework : allocator.frameworks()) {
    ResourceVector tracked = allocator.frameworkAllocated(framework->id());
    ResourceVector actual = taskSums.count(framework->id()) != 0
                                ? taskSums.at(framework->id())
                                : ResourceVector();
    if (!(tracked == actual)) {
      throw InvariantViolationError(
          "framework " + framework->id() + " tracked allocation " +
          tracked.toString() + " does not match task sum " + actual.toString(),
          eventIndex);
    }
  }
}

void verifyWorld(const Cluster& cluster, const Allocator& allocator,
                 const ServiceFramework* services, const BuildFramework* builds,
                 size_t eventIndex) {
  verifyCluster(cluster, allocator, eventIndex);

  if (services != nullptr) {
    for (const std::string& appId : services->appIds()) {
      const AppDefinition& def = services->definition(appId);
      const std::vector<ServiceInstance>& instances =
          services->instances(appId);
      if (static_cast<int>(instances.size()) > def.instances) {
        throw InvariantViolationError(
            "app " + appId + " has " + std::to_string(instances.size()) +
            " instances, definition allows " + std::to_string(def.instances),
            eventIndex);
      }
      for (size_t i = 0; i < instances.size(); i++) {
        std::vector<AgentSpec> others;
        for (size_t j = 0; j < instances.size(); j++) {
          if (j != i) {
            others.push_back(cluster.agent(instances[j].agentId).spec);
          }
        }
        bool ok = false;
        try {
          ok = evaluateConstraints(def, cluster.agent(instances[i].agentId).spec,
                                   others);
        } catch (const UnknownFieldError&) {
          ok = false;
        }
        if (!ok) {
          throw InvariantViolationError(
              "app " + appId + " instance " + instances[i].taskId +
              " on agent " + instances[i].agentId + " violates a constraint",
              eventIndex);
        }
      }
    }
  }

  if (builds != nullptr) {
    for (const std::string& label : builds->labels()) {
      if (builds->waitingCount(label) > 0 && builds->hasIdleBuilder(label)) {
        throw InvariantViolationError(
            "queue " + label + " has waiting jobs beside an idle builder",
            eventIndex);
      }
    }
  }
}

} // namespace offersched
