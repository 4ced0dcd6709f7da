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

#include "offersched/build.hpp"

#include <algorithm>

#include "offersched/errors.hpp"

namespace offersched {

std::string toString(BuilderState state) {
  switch (state) {
    case BuilderState::Provisioning: return "provisioning";
    case BuilderState::Idle: return "idle";
    case BuilderState::Busy: return "busy";
    case BuilderState::Reaped: return "reaped";
  }
  return "?";
}

BuildFramework::BuildFramework(FrameworkId id, EventLog& log, TaskOps& taskOps)
  : id_(std::move(id)), name_("builds"), log_(log), taskOps_(taskOps) {}

void BuildFramework::addQueue(QueueConfig config) {
  if (config.label.empty()) {
    throw ValidationError("queue label is required");
  }
  if (queues_.count(config.label) != 0) {
    throw ValidationError("duplicate queue label " + config.label);
  }
  if (config.request.millicores() <= 0 || config.request.memTenths() <= 0) {
    throw ValidationError("queue " + config.label +
                          " needs cpus > 0 and mem > 0 per builder");
  }
  if (config.maxBuilders < 1) {
    throw ValidationError("queue " + config.label + " maxBuilders must be >= 1");
  }
  if (config.idleTimeout <= 0) {
    throw ValidationError("queue " + config.label + " idleTimeout must be > 0");
  }
  if (config.weight < 1) {
    throw ValidationError("queue " + config.label + " weight must be >= 1");
  }
  waiting_.emplace(config.label, std::deque<JobId>());
  queues_.emplace(config.label, std::move(config));
}

const QueueConfig& BuildFramework::queue(const std::string& label) const {
  auto it = queues_.find(label);
  if (it == queues_.end()) {
    throw UnknownLabelError("no queue labeled " + label);
  }
  return it->second;
}

std::vector<std::string> BuildFramework::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, config] : queues_) {
    out.push_back(label);
  }
  return out;
}

void BuildFramework::submit(BuildJob job, SimTime now) {
  if (queues_.count(job.label) == 0) {
    throw UnknownLabelError("no queue labeled " + job.label);
  }
  if (job.duration <= 0) {
    throw ValidationError("job " + job.id + " duration must be > 0");
  }
  if (jobs_.count(job.id) != 0) {
    throw ValidationError("duplicate job id " + job.id);
  }
  job.submittedAt = now;
  waiting_.at(job.label).push_back(job.id);
  log_.append(now, "job_submitted",
      {{"job", job.id}, {"kind", job.kind}, {"label", job.label}});
  jobs_.emplace(job.id, std::move(job));
}

int BuildFramework::builderCount(const std::string& label) const {
  int count = 0;
  for (const auto& [id, b] : builders_) {
    if (b.label == label && b.state != BuilderState::Reaped) {
      count++;
    }
  }
  return count;
}

int BuildFramework::deficit(const std::string& label) const {
  int inbound = 0;
  for (const auto& [id, b] : builders_) {
    if (b.label == label && (b.state == BuilderState::Provisioning ||
                             b.state == BuilderState::Idle)) {
      inbound++;
    }
  }
  return static_cast<int>(waiting_.at(label).size()) - inbound;
}

size_t BuildFramework::waitingCount(const std::string& label) const {
  auto it = waiting_.find(label);
  if (it == waiting_.end()) {
    throw UnknownLabelError("no queue labeled " + label);
  }
  return it->second.size();
}

bool BuildFramework::hasIdleBuilder(const std::string& label) const {
  for (const auto& [id, b] : builders_) {
    if (b.label == label && b.state == BuilderState::Idle) {
      return true;
    }
  }
  return false;
}

bool BuildFramework::wantsOffers() const {
  for (const auto& [label, config] : queues_) {
    if (deficit(label) > 0 && builderCount(label) < config.maxBuilders) {
      return true;
    }
  }
  return false;
}

int BuildFramework::fitCount(const ResourceVector& free,
                             const ResourceVector& request) const {
  int64_t byCpu = free.millicores() / request.millicores();
  int64_t byMem = free.memTenths() / request.memTenths();
  int64_t fit = std::min(byCpu, byMem);
  if (request.diskTenths() > 0) {
    fit = std::min(fit, free.diskTenths() / request.diskTenths());
  }
  return static_cast<int>(fit);
}

std::optional<OfferResponse> BuildFramework::onOffer(const Offer& offer,
                                                     SimTime now) {
  (void)now;
  // Pool-restricted agents (static partitioning) only serve their own queue.
  auto poolAttr = offer.attributes.find("pool");

  const QueueConfig* best = nullptr;
  int64_t bestScore = 0;
  for (const auto& [label, config] : queues_) {
    if (poolAttr != offer.attributes.end() && poolAttr->second != label) {
      continue;
    }
    if (deficit(label) <= 0) {
      continue;
    }
    if (builderCount(label) >= config.maxBuilders) {
      continue;
    }
    if (!offer.resources.contains(config.request)) {
      continue;
    }
    int64_t score = static_cast<int64_t>(config.weight) *
                    static_cast<int64_t>(waiting_.at(label).size());
    if (best == nullptr || score > bestScore) {
      best = &config;
      bestScore = score;
    }
    // Ties keep the first label in map order (lexicographic).
  }
  if (best == nullptr) {
    return OfferResponse::decline();
  }

  int count = std::min({fitCount(offer.resources, best->request),
                        deficit(best->label),
                        best->maxBuilders - builderCount(best->label)});
  std::vector<TaskSpec> specs;
  for (int i = 0; i < count; i++) {
    BuilderId builderId =
        "bld-" + best->label + "-" + std::to_string(builderCounter_++);
    TaskSpec spec;
    spec.taskId = builderId;
    spec.request = best->request;
    spec.containerImage = best->containerImage;
    spec.payload = best->label;
    specs.push_back(spec);

    Builder builder;
    builder.id = builderId;
    builder.label = best->label;
    builder.taskId = builderId;
    builder.state = BuilderState::Provisioning;
    byTask_.emplace(builderId, builderId);
    builders_.emplace(builderId, std::move(builder));
  }
  return OfferResponse::accept(std::move(specs));
}

void BuildFramework::onTaskRunning(const TaskRecord& task, SimTime now) {
  auto it = byTask_.find(task.id);
  if (it == byTask_.end()) {
    return;
  }
  Builder& builder = builders_.at(it->second);
  if (builder.state == BuilderState::Provisioning) {
    builder.state = BuilderState::Idle;
    builder.idleSince = now;
  }
}

std::vector<Assignment> BuildFramework::assign(SimTime now) {
  std::vector<Assignment> out;
  for (auto& [label, queue] : waiting_) {
    while (!queue.empty()) {
      // Lowest-id Idle builder of this label, for determinism.
      Builder* chosen = nullptr;
      for (auto& [id, b] : builders_) {
        if (b.label == label && b.state == BuilderState::Idle) {
          chosen = &b;
          break;
        }
      }
      if (chosen == nullptr) {
        break;
      }
      JobId jobId = queue.front();
      queue.pop_front();
      BuildJob& job = jobs_.at(jobId);
      bool firstRun = job.startedAt < 0;
      if (firstRun) {
        job.startedAt = now;
      }
      job.attempt++;
      chosen->state = BuilderState::Busy;
      chosen->jobId = jobId;
      chosen->idleSince = -1;
      activeJob_[jobId] = chosen->id;
      log_.append(now, firstRun ? "job_started" : "job_restarted",
          {{"job", jobId}, {"builder", chosen->id},
           {"waited", now - job.submittedAt}});
      out.push_back({jobId, chosen->id, job.duration, job.attempt});
    }
  }
  return out;
}

std::optional<TaskId> BuildFramework::completeJob(const JobId& jobId,
                                                  int attempt, SimTime now) {
  auto jobIt = jobs_.find(jobId);
  if (jobIt == jobs_.end()) {
    throw Error("unknown job " + jobId);
  }
  BuildJob& job = jobIt->second;
  auto active = activeJob_.find(jobId);
  if (active == activeJob_.end() || job.attempt != attempt ||
      job.finishedAt >= 0) {
    return std::nullopt; // stale completion from a lost run
  }
  Builder& builder = builders_.at(active->second);
  job.finishedAt = now;
  activeJob_.erase(active);
  builder.state = BuilderState::Reaped;
  builder.jobId.reset();
  log_.append(now, "job_finished", {{"job", jobId}, {"builder", builder.id}});
  return builder.taskId;
}

std::vector<BuilderId> BuildFramework::reapIdle(SimTime now) {
  std::vector<BuilderId> reaped;
  for (auto& [id, builder] : builders_) {
    if (builder.state != BuilderState::Idle) {
      continue;
    }
    const QueueConfig& config = queues_.at(builder.label);
    if (now - builder.idleSince < config.idleTimeout) {
      continue;
    }
    builder.state = BuilderState::Reaped;
    reaped.push_back(id);
    log_.append(now, "builder_reaped", {{"builder", id},
                                        {"label", builder.label}});
  }
  // Kills after the sweep: killTask re-enters through onTaskTerminal.
  for (const BuilderId& id : reaped) {
    TaskId taskId = builders_.at(id).taskId;
    taskOps_.killTask(taskId, now);
  }
  return reaped;
}

void BuildFramework::onTaskTerminal(const TaskRecord& task, SimTime now) {
  (void)now;
  auto it = byTask_.find(task.id);
  if (it == byTask_.end()) {
    return;
  }
  BuilderId builderId = it->second;
  Builder& builder = builders_.at(builderId);
  if (builder.state == BuilderState::Busy && builder.jobId) {
    // Builder died mid-run: the job goes back to the head of its queue and
    // will re-run in full; startedAt keeps the first start.
    JobId jobId = *builder.jobId;
    activeJob_.erase(jobId);
    waiting_.at(builder.label).push_front(jobId);
    log_.append(now, "job_requeued", {{"job", jobId}, {"builder", builderId}});
  }
  byTask_.erase(it);
  builders_.erase(builderId);
}

const BuildJob& BuildFramework::job(const JobId& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) {
    throw Error("unknown job " + id);
  }
  return it->second;
}

bool BuildFramework::hasJob(const JobId& id) const {
  return jobs_.count(id) != 0;
}

} // namespace offersched
