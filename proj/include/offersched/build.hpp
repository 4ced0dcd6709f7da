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

#ifndef OFFERSCHED_BUILD_HPP
#define OFFERSCHED_BUILD_HPP

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offersched/events.hpp"
#include "offersched/master.hpp"
#include "offersched/resources.hpp"

namespace offersched {

struct QueueConfig {
  std::string label;
  ResourceVector request; // per builder
  std::optional<std::string> containerImage;
  int maxBuilders = 1;
  SimTime idleTimeout = seconds(300);
  int weight = 1;
};

struct BuildJob {
  JobId id;
  std::string label;
  std::string kind; // release, ib, or pr-test
  SimTime duration = 0;
  SimTime submittedAt = -1;
  SimTime startedAt = -1; // first start; survives reruns after builder loss
  SimTime finishedAt = -1;
  int attempt = 0;
};

enum class BuilderState { Provisioning, Idle, Busy, Reaped };

std::string toString(BuilderState state);

// A single-job executor: provisioned from an offer, takes one job from its
// queue, and is reaped after the job (or after idling out).
struct Builder {
  BuilderId id;
  std::string label;
  TaskId taskId;
  BuilderState state = BuilderState::Provisioning;
  SimTime idleSince = -1;
  std::optional<JobId> jobId;
};

struct Assignment {
  JobId jobId;
  BuilderId builderId;
  SimTime duration = 0;
  int attempt = 0;
};

// Elastic CI framework: labeled FIFO queues, on-demand builder provisioning
// from offers, and idle reaping so drained queues release their resources.
class BuildFramework : public FrameworkHandle {
 public:
  BuildFramework(FrameworkId id, EventLog& log, TaskOps& taskOps);

  void addQueue(QueueConfig config);
  const QueueConfig& queue(const std::string& label) const;
  std::vector<std::string> labels() const;

  void submit(BuildJob job, SimTime now);

  // Matches Idle builders to queue heads; jobs start in submit order.
  std::vector<Assignment> assign(SimTime now);

  // Completion for a specific run attempt; stale attempts (the builder was
  // lost and the job re-queued) return nullopt and change nothing.
  std::optional<TaskId> completeJob(const JobId& jobId, int attempt,
                                    SimTime now);

  std::vector<BuilderId> reapIdle(SimTime now);

  const BuildJob& job(const JobId& id) const;
  bool hasJob(const JobId& id) const;
  const std::map<JobId, BuildJob>& jobs() const { return jobs_; }
  const std::map<BuilderId, Builder>& builders() const { return builders_; }
  size_t waitingCount(const std::string& label) const;
  bool hasIdleBuilder(const std::string& label) const;
  int builderCount(const std::string& label) const; // not Reaped

  const FrameworkId& id() const override { return id_; }
  const std::string& name() const override { return name_; }
  bool wantsOffers() const override;
  std::optional<OfferResponse> onOffer(const Offer& offer,
                                       SimTime now) override;
  void onTaskRunning(const TaskRecord& task, SimTime now) override;
  void onTaskTerminal(const TaskRecord& task, SimTime now) override;

 private:
  // Waiting jobs not yet covered by a builder that is idle or on its way.
  int deficit(const std::string& label) const;
  int fitCount(const ResourceVector& free, const ResourceVector& request) const;

  FrameworkId id_;
  std::string name_;
  EventLog& log_;
  TaskOps& taskOps_;
  std::map<std::string, QueueConfig> queues_;
  std::map<std::string, std::deque<JobId>> waiting_;
  std::map<JobId, BuildJob> jobs_;
  std::map<BuilderId, Builder> builders_;
  std::map<TaskId, BuilderId> byTask_;
  std::map<JobId, BuilderId> activeJob_; // Busy holder per running job
  uint64_t builderCounter_ = 0;
};

} // namespace offersched

#endif // OFFERSCHED_BUILD_HPP
