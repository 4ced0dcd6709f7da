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

#ifndef OFFERSCHED_SIM_HPP
#define OFFERSCHED_SIM_HPP

#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "offersched/build.hpp"
#include "offersched/cluster.hpp"
#include "offersched/discovery.hpp"
#include "offersched/events.hpp"
#include "offersched/master.hpp"
#include "offersched/metrics.hpp"
#include "offersched/scenario.hpp"
#include "offersched/service.hpp"

namespace offersched {

// Allocation rounds, idle reaping, health probes, and the proxy cron all run
// off this clock.
inline constexpr SimTime kRoundPeriod = 5000;

struct RunResult {
  EventLog log;
  MetricsReport report;
};

// Single-threaded discrete-event loop owning all mutable state. Events at
// equal times are ordered by schedule sequence; an event may schedule others
// only at its own time or later, with at most one equal-time hop per causal
// chain. Two runs of the same (scenario, seed) produce byte-identical logs.
class SimEngine : private TaskOps {
 public:
  SimEngine(Scenario scenario, bool verify);

  // Single use; throws on a second call.
  RunResult run();

  const Cluster& cluster() const { return *cluster_; }
  const Allocator& allocator() const { return *allocator_; }
  const MasterGroup& masters() const { return *masters_; }
  const BuildFramework* builds() const { return builds_.get(); }
  const ServiceFramework* services() const { return services_.get(); }

 private:
  struct SimEvent {
    enum class Type {
      RoundTick,
      JobArrival,
      JobCompletion,
      TaskLaunched,
      Failure,
      SimEnd,
    };

    SimTime t = 0;
    uint64_t seq = 0;
    int depth = 0;
    Type type = Type::RoundTick;
    std::string id;   // job or task id
    size_t index = 0; // workload or failure index
    int attempt = 0;
  };

  struct LaterEvent {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  void killTask(const TaskId& id, SimTime now) override;

  void schedule(SimEvent event);
  void seedQueue();
  void dispatch(const SimEvent& event);
  void handleRoundTick(SimTime now);
  void handleArrival(const SimEvent& event);
  void handleFailure(const FailureSpec& failure, SimTime now);
  void runAssign(SimTime now);
  void verifyNow();

  Scenario scenario_;
  bool verify_;
  bool ran_ = false;
  bool halted_ = false;

  EventLog log_;
  std::unique_ptr<MasterGroup> masters_;
  std::unique_ptr<Cluster> cluster_;
  std::unique_ptr<Allocator> allocator_;
  std::unique_ptr<BuildFramework> builds_;
  std::unique_ptr<ServiceFramework> services_;
  std::unique_ptr<ProxyCron> cron_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, LaterEvent> queue_;
  uint64_t seqCounter_ = 0;
  SimTime currentT_ = 0;
  int currentDepth_ = 0;
  bool looping_ = false;
};

// Convenience wrapper: build the engine, run, return the result.
RunResult runScenario(const Scenario& scenario, bool verify);

} // namespace offersched

#endif // OFFERSCHED_SIM_HPP
