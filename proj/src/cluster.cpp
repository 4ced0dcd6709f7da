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

#include "offersched/cluster.hpp"

#include "offersched/errors.hpp"

namespace offersched {

Cluster::Cluster(std::vector<AgentSpec> agents, EventLog* log) : log_(log) {
  for (AgentSpec& spec : agents) {
    if (spec.total.millicores() <= 0 || spec.total.memTenths() <= 0) {
      throw ValidationError(
          "agent " + spec.id + " must have positive cpus and mem");
    }
    if (agents_.count(spec.id)) {
      throw ValidationError("duplicate agent id " + spec.id);
    }
    AgentState state;
    state.spec = std::move(spec);
    agents_.emplace(state.spec.id, std::move(state));
  }
  if (log_ != nullptr) {
    for (const auto& [id, state] : agents_) {
      nlohmann::json attrs(state.spec.attributes);
      log_->append(0, "agent_added",
          {{"agent", id},
           {"total", state.spec.total.toJson()},
           {"attributes", attrs},
           {"zone", state.spec.zone}});
    }
  }
}

AgentState& Cluster::agent(const AgentId& id) {
  auto it = agents_.find(id);
  if (it == agents_.end()) {
    throw Error("unknown agent " + id);
  }
  return it->second;
}

const AgentState& Cluster::agent(const AgentId& id) const {
  return const_cast<Cluster*>(this)->agent(id);
}

ResourceVector Cluster::totalAlive() const {
  ResourceVector total;
  for (const auto& [id, state] : agents_) {
    if (state.alive) {
      total += state.spec.total;
    }
  }
  return total;
}

const TaskRecord& Cluster::task(const TaskId& id) const {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) {
    throw Error("unknown task " + id);
  }
  return it->second;
}

const TaskRecord& Cluster::launch(
    const FrameworkId& frameworkId,
    const AgentId& agentId,
    const TaskId& taskId,
    const ResourceVector& request,
    const std::optional<std::string>& containerImage,
    const std::vector<int>& containerPorts,
    const std::string& payload,
    SimTime now) {
  if (tasks_.count(taskId)) {
    throw Error("duplicate task id " + taskId);
  }
  AgentState& state = agent(agentId);
  if (!state.alive) {
    throw Error("launch on dead agent " + agentId);
  }

  TaskRecord record;
  record.id = taskId;
  record.frameworkId = frameworkId;
  record.agentId = agentId;
  record.request = request;
  record.containerImage = containerImage;
  record.payload = payload;
  record.state = TaskState::Staging;
  record.stagedAt = now;
  for (int containerPort : containerPorts) {
    record.ports.push_back(PortMapping{containerPort, state.ports.allocate()});
  }

  state.allocated += request;
  state.tasks.insert(taskId);

  auto [it, inserted] = tasks_.emplace(taskId, std::move(record));
  const TaskRecord& stored = it->second;
  if (log_ != nullptr) {
    nlohmann::json ports = nlohmann::json::array();
    for (const PortMapping& m : stored.ports) {
      ports.push_back({{"container", m.containerPort}, {"host", m.hostPort}});
    }
    log_->append(now, "task_staged",
        {{"task", stored.id},
         {"framework", stored.frameworkId},
         {"agent", stored.agentId},
         {"request", stored.request.toJson()},
         {"image", stored.containerImage ? nlohmann::json(*stored.containerImage)
                                         : nlohmann::json()},
         {"ports", ports},
         {"payload", stored.payload}});
  }
  return stored;
}

const TaskRecord& Cluster::transition(
    const TaskId& id, TaskEvent event, SimTime now) {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) {
    throw Error("unknown task " + id);
  }
  TaskRecord& record = it->second;
  record.state = nextTaskState(record.state, event);

  if (record.state == TaskState::Running) {
    record.startedAt = now;
  } else if (isTerminal(record.state)) {
    record.endedAt = now;
    AgentState& state = agent(record.agentId);
    state.allocated -= record.request;
    state.tasks.erase(id);
    for (const PortMapping& m : record.ports) {
      state.ports.release(m.hostPort);
    }
  }

  if (log_ != nullptr) {
    log_->append(now, std::string("task_") + toString(record.state),
        {{"task", record.id}});
  }
  return record;
}

void Cluster::markDead(const AgentId& id, SimTime now) {
  AgentState& state = agent(id);
  if (!state.tasks.empty()) {
    throw Error("agent " + id + " still has tasks; transition them first");
  }
  if (!state.offered.empty()) {
    throw Error("agent " + id + " still has offered resources");
  }
  state.alive = false;
  state.ports.reset();
  if (log_ != nullptr) {
    log_->append(now, "agent_crashed", {{"agent", id}});
  }
}

void Cluster::markAlive(const AgentId& id, SimTime now) {
  AgentState& state = agent(id);
  state.alive = true;
  if (log_ != nullptr) {
    log_->append(now, "agent_recovered", {{"agent", id}});
  }
}

} // namespace offersched
