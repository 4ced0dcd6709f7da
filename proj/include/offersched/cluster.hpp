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

#ifndef OFFERSCHED_CLUSTER_HPP
#define OFFERSCHED_CLUSTER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offersched/events.hpp"
#include "offersched/resources.hpp"

namespace offersched {

// Agent and task bookkeeping. All mutations come in through the allocator
// (which also notifies frameworks); the cluster guarantees the accounting:
// allocated + offered never exceeds an agent's total, and an agent's
// allocated always equals the resource sum of its non-terminal tasks.
class Cluster {
 public:
  Cluster(std::vector<AgentSpec> agents, EventLog* log);

  const std::map<AgentId, AgentState>& agents() const { return agents_; }
  AgentState& agent(const AgentId& id);
  const AgentState& agent(const AgentId& id) const;
  bool hasAgent(const AgentId& id) const { return agents_.count(id) > 0; }

  // Sum of totals across alive agents; the fair-share denominator.
  ResourceVector totalAlive() const;

  const TaskRecord& task(const TaskId& id) const;
  bool hasTask(const TaskId& id) const { return tasks_.count(id) > 0; }
  const std::map<TaskId, TaskRecord>& tasks() const { return tasks_; }

  // Creates a Staging task and moves its request from the agent's free pool
  // into allocated. Host ports are assigned here, lowest free first.
  const TaskRecord& launch(
      const FrameworkId& frameworkId,
      const AgentId& agentId,
      const TaskId& taskId,
      const ResourceVector& request,
      const std::optional<std::string>& containerImage,
      const std::vector<int>& containerPorts,
      const std::string& payload,
      SimTime now);

  // Steps the task state machine; terminal transitions release the task's
  // resources and host ports. Throws IllegalTransitionError.
  const TaskRecord& transition(const TaskId& id, TaskEvent event, SimTime now);

  void markDead(const AgentId& id, SimTime now);
  void markAlive(const AgentId& id, SimTime now);

 private:
  std::map<AgentId, AgentState> agents_;
  std::map<TaskId, TaskRecord> tasks_;
  EventLog* log_;
};

} // namespace offersched

#endif // OFFERSCHED_CLUSTER_HPP
