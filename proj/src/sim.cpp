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

#include "offersched/sim.hpp"

#include <cstdio>

#include "offersched/errors.hpp"
#include "offersched/verify.hpp"

namespace offersched {

namespace {

// Static partitioning is expressed on the agents themselves: every pooled
// agent carries a "pool" attribute naming its queue (or "services"), which
// the build framework uses to keep each pool on its own label.
void materializePoolAttributes(Scenario& scenario) {
  if (scenario.policy != Policy::Static || !scenario.staticMap) {
    return;
  }
  std::map<AgentId, std::string> poolOf;
  for (const auto& [pool, members] : *scenario.staticMap) {
    for (const AgentId& id : members) {
      poolOf[id] = pool;
    }
  }
  for (AgentSpec& agent : scenario.agents) {
    auto it = poolOf.find(agent.id);
    if (it != poolOf.end()) {
      agent.attributes["pool"] = it->second;
    }
  }
}

} // namespace

SimEngine::SimEngine(Scenario scenario, bool verify)
  : scenario_(std::move(scenario)), verify_(verify) {
  materializePoolAttributes(scenario_);

  masters_ = std::make_unique<MasterGroup>(
      scenario_.masters.empty() ? MasterGroup::makeDefault()
                                : MasterGroup(scenario_.masters));
  cluster_ = std::make_unique<Cluster>(scenario_.agents, &log_);
  allocator_ = std::make_unique<Allocator>(*cluster_, *masters_, log_,
                                           scenario_.offerTtl);

  TaskOps& ops = *this;
  if (!scenario_.queues.empty()) {
    builds_ = std::make_unique<BuildFramework>("builds", log_, ops);
    for (const QueueConfig& queue : scenario_.queues) {
      builds_->addQueue(queue);
    }
    allocator_->registerFramework(builds_.get());
  }
  if (!scenario_.apps.empty()) {
    services_ = std::make_unique<ServiceFramework>("services", *cluster_, log_,
                                                   ops);
    allocator_->registerFramework(services_.get());
    cron_ = std::make_unique<ProxyCron>(scenario_.proxyPeriod);
  }

  if (scenario_.policy == Policy::Static) {
    std::map<AgentId, FrameworkId> binding;
    for (const auto& [pool, members] : *scenario_.staticMap) {
      FrameworkId framework = pool == "services" ? "services" : "builds";
      for (const AgentId& id : members) {
        binding[id] = framework;
      }
    }
    allocator_->setStaticBinding(std::move(binding));
  }
}

void SimEngine::killTask(const TaskId& id, SimTime now) {
  allocator_->applyTransition(id, TaskEvent::Kill, now);
}

void SimEngine::schedule(SimEvent event) {
  if (event.t < currentT_) {
    throw Error("cannot schedule an event into the past");
  }
  event.seq = seqCounter_++;
  if (looping_ && event.t == currentT_) {
    event.depth = currentDepth_ + 1;
    if (event.depth > 1) {
      throw Error("zero-delay event chain detected");
    }
  } else {
    event.depth = 0;
  }
  queue_.push(std::move(event));
}

void SimEngine::seedQueue() {
  for (size_t i = 0; i < scenario_.workload.size(); i++) {
    const WorkloadSpec& w = scenario_.workload[i];
    std::vector<SimTime> times;
    if (w.arrivals.type == ArrivalSpec::Type::Timeline) {
      times = w.arrivals.timeline;
    } else {
      RngStream stream(scenario_.seed, "arrivals/" + w.kind + "/" + w.label);
      double ratePerMs = w.arrivals.ratePerDay / 86400000.0;
      SimTime t = stream.nextExpGapMs(ratePerMs);
      while (t <= scenario_.duration) {
        times.push_back(t);
        t += stream.nextExpGapMs(ratePerMs);
      }
    }
    int serial = 0;
    for (SimTime t : times) {
      SimEvent event;
      event.t = t;
      event.type = SimEvent::Type::JobArrival;
      event.index = i;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "%04d", ++serial);
      event.id = w.kind + "-" + w.label + "-" + suffix;
      schedule(std::move(event));
    }
  }
  for (size_t i = 0; i < scenario_.failures.size(); i++) {
    SimEvent event;
    event.t = scenario_.failures[i].at;
    event.type = SimEvent::Type::Failure;
    event.index = i;
    schedule(std::move(event));
  }
  SimEvent tick;
  tick.t = 0;
  tick.type = SimEvent::Type::RoundTick;
  schedule(std::move(tick));
  SimEvent end;
  end.t = scenario_.duration;
  end.type = SimEvent::Type::SimEnd;
  schedule(std::move(end));
}

void SimEngine::runAssign(SimTime now) {
  if (builds_ == nullptr) {
    return;
  }
  for (const Assignment& assignment : builds_->assign(now)) {
    SimEvent event;
    event.t = now + assignment.duration;
    event.type = SimEvent::Type::JobCompletion;
    event.id = assignment.jobId;
    event.attempt = assignment.attempt;
    schedule(std::move(event));
  }
}

void SimEngine::handleRoundTick(SimTime now) {
  if (builds_ != nullptr) {
    builds_->reapIdle(now);
  }
  try {
    allocator_->allocationRound(now);
    for (const auto& [id, task] : cluster_->tasks()) {
      if (task.state == TaskState::Staging) {
        SimEvent event;
        event.t = now;
        event.type = SimEvent::Type::TaskLaunched;
        event.id = id;
        schedule(std::move(event));
      }
    }
  } catch (const NoQuorumError&) {
    log_.append(now, "no_quorum", nlohmann::json::object());
  }
  if (services_ != nullptr) {
    services_->runHealthChecks(now);
  }
  if (cron_ != nullptr) {
    cron_->tick(*services_, log_, now);
  }
  SimEvent next;
  next.t = now + kRoundPeriod;
  next.type = SimEvent::Type::RoundTick;
  schedule(std::move(next));
}

void SimEngine::handleArrival(const SimEvent& event) {
  const WorkloadSpec& w = scenario_.workload[event.index];
  BuildJob job;
  job.id = event.id;
  job.label = w.label;
  job.kind = w.kind;
  job.duration = w.duration;
  builds_->submit(std::move(job), event.t);
  runAssign(event.t);
}

void SimEngine::handleFailure(const FailureSpec& failure, SimTime now) {
  switch (failure.kind) {
    case FailureKind::AgentCrash:
      if (cluster_->agent(failure.target).alive) {
        allocator_->crashAgent(failure.target, now);
        runAssign(now);
      }
      break;
    case FailureKind::AgentRecover:
      if (!cluster_->agent(failure.target).alive) {
        allocator_->recoverAgent(failure.target, now);
      }
      break;
    case FailureKind::MasterCrash:
      if (masters_->alive(failure.target)) {
        masters_->crash(failure.target);
        log_.append(now, "master_crashed", {{"master", failure.target}});
      }
      break;
    case FailureKind::MasterRecover:
      if (!masters_->alive(failure.target)) {
        masters_->recover(failure.target);
        log_.append(now, "master_recovered", {{"master", failure.target}});
      }
      break;
    case FailureKind::TaskFail: {
      std::optional<TaskId> victim = services_->pickVictim(failure.target);
      log_.append(now, "task_fail_injected",
          {{"app", failure.target},
           {"task", victim ? nlohmann::json(*victim) : nlohmann::json()}});
      if (victim) {
        allocator_->applyTransition(*victim, TaskEvent::Failed, now);
      }
      break;
    }
  }
}

void SimEngine::dispatch(const SimEvent& event) {
  switch (event.type) {
    case SimEvent::Type::RoundTick:
      handleRoundTick(event.t);
      break;
    case SimEvent::Type::JobArrival:
      handleArrival(event);
      break;
    case SimEvent::Type::JobCompletion: {
      std::optional<TaskId> taskId =
          builds_->completeJob(event.id, event.attempt, event.t);
      if (taskId) {
        allocator_->applyTransition(*taskId, TaskEvent::Completed, event.t);
      }
      break;
    }
    case SimEvent::Type::TaskLaunched:
      if (cluster_->hasTask(event.id) &&
          cluster_->task(event.id).state == TaskState::Staging) {
        allocator_->applyTransition(event.id, TaskEvent::Launched, event.t);
        runAssign(event.t);
      }
      break;
    case SimEvent::Type::Failure:
      handleFailure(scenario_.failures[event.index], event.t);
      break;
    case SimEvent::Type::SimEnd:
      log_.append(event.t, "sim_ended", nlohmann::json::object());
      halted_ = true;
      break;
  }
}

void SimEngine::verifyNow() {
  verifyWorld(*cluster_, *allocator_, services_.get(), builds_.get(),
              log_.size());
}

RunResult SimEngine::run() {
  if (ran_) {
    throw Error("SimEngine::run is single use");
  }
  ran_ = true;

  for (const AppDefinition& app : scenario_.apps) {
    services_->deploy(app, 0);
  }
  log_.append(0, "sim_started",
      {{"policy", toString(scenario_.policy)}, {"seed", scenario_.seed}});

  seedQueue();
  if (verify_) {
    verifyNow();
  }

  looping_ = true;
  while (!halted_ && !queue_.empty()) {
    SimEvent event = queue_.top();
    queue_.pop();
    currentT_ = event.t;
    currentDepth_ = event.depth;
    dispatch(event);
    if (verify_) {
      verifyNow();
    }
  }
  looping_ = false;

  RunResult result;
  result.report = computeMetrics(log_);
  result.log = std::move(log_);
  return result;
}

RunResult runScenario(const Scenario& scenario, bool verify) {
  SimEngine engine(scenario, verify);
  return engine.run();
}

} // namespace offersched
