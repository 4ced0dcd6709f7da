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

#ifndef OFFERSCHED_MASTER_HPP
#define OFFERSCHED_MASTER_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "offersched/cluster.hpp"
#include "offersched/events.hpp"
#include "offersched/resources.hpp"

namespace offersched {

// A time-limited grant of one agent's free resources to one framework.
struct Offer {
  OfferId id;
  AgentId agentId;
  FrameworkId frameworkId;
  ResourceVector resources;
  AttributeSet attributes;
  SimTime issuedAt = 0;
  SimTime expiresAt = 0;
};

// What a framework asks to launch out of an accepted offer.
struct TaskSpec {
  TaskId taskId;
  ResourceVector request;
  std::optional<std::string> containerImage;
  std::vector<int> containerPorts;
  std::string payload;
};

struct OfferResponse {
  static OfferResponse decline() { return OfferResponse{}; }
  static OfferResponse accept(std::vector<TaskSpec> tasks) {
    OfferResponse r;
    r.accepted = true;
    r.tasks = std::move(tasks);
    return r;
  }

  bool accepted = false;
  std::vector<TaskSpec> tasks;
};

// Services that the scheduler core exposes to frameworks so they can kill
// their own tasks (scale-down, health evictions, idle reaping).
class TaskOps {
 public:
  virtual ~TaskOps() = default;
  virtual void killTask(const TaskId& id, SimTime now) = 0;
};

// The framework side of the two-level protocol. Implementations decide what
// to run on offered resources; the allocator decides who gets offered.
// Returning nullopt from onOffer holds the offer open: the framework may
// respond later through Allocator::respond, or let the offer expire.
class FrameworkHandle {
 public:
  virtual ~FrameworkHandle() = default;

  virtual const FrameworkId& id() const = 0;
  virtual const std::string& name() const = 0;

  // Demand signal: agents are only offered to frameworks that want more.
  virtual bool wantsOffers() const = 0;

  virtual std::optional<OfferResponse> onOffer(const Offer& offer,
                                               SimTime now) = 0;

  virtual void onTaskRunning(const TaskRecord& task, SimTime now) {
    (void)task;
    (void)now;
  }
  virtual void onTaskTerminal(const TaskRecord& task, SimTime now) {
    (void)task;
    (void)now;
  }
};

struct MasterSpec {
  std::string id;
  std::string zone;
};

// Three masters in distinct zones; the group schedules only with two alive
// (loss of one machine is tolerated, loss of two halts offer issuance).
// The leader is always the lowest-id alive master. The replicated registry
// is implicit: agent and task state survives failover, outstanding offers
// do not (they are rescinded on leader change).
class MasterGroup {
 public:
  explicit MasterGroup(std::vector<MasterSpec> masters);

  static MasterGroup makeDefault();

  const std::vector<MasterSpec>& masters() const { return masters_; }
  bool alive(const std::string& id) const;
  int aliveCount() const;
  bool quorum() const { return aliveCount() >= 2; }

  // Lowest-id alive master; requires at least one alive.
  const std::string& leader() const;

  // Deterministic, idempotent; throws NoQuorumError below quorum.
  const std::string& electLeader() const;

  void crash(const std::string& id);
  void recover(const std::string& id);

 private:
  int indexOf(const std::string& id) const;

  std::vector<MasterSpec> masters_; // sorted by id
  std::vector<bool> alive_;
};

// Exact dominant-share fraction (num/den), compared by cross multiplication
// so fairness ordering never depends on floating-point rounding.
struct Share {
  int64_t num = 0;
  int64_t den = 1;

  double value() const {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
};

bool shareLess(const Share& a, const Share& b);

Share dominantShare(const ResourceVector& allocated,
                    const ResourceVector& clusterTotal);

// Ascending dominant share, ties by framework id.
std::vector<FrameworkId> sortFrameworksFair(
    const std::vector<std::pair<FrameworkId, ResourceVector>>& allocations,
    const ResourceVector& clusterTotal);

// The two-level scheduler core. One logical actor: every call mutates state
// synchronously, frameworks are invoked inline while an event is processed.
class Allocator {
 public:
  Allocator(Cluster& cluster, MasterGroup& masters, EventLog& log,
            SimTime offerTtl);

  void registerFramework(FrameworkHandle* framework);
  FrameworkHandle* framework(const FrameworkId& id) const;
  const std::vector<FrameworkHandle*>& frameworks() const {
    return frameworks_;
  }

  // Static partitioning: each agent is offered only to its bound framework.
  // Unset (the default) means dynamic fair-share allocation.
  void setStaticBinding(std::map<AgentId, FrameworkId> binding);

  // One allocation round: elects the leader (rescinding outstanding offers
  // on a change), then issues at most one offer per alive agent with free
  // resources and feeds responses through handleResponse. Throws
  // NoQuorumError without issuing anything when fewer than 2 masters live.
  std::vector<Offer> allocationRound(SimTime now);

  // Response path for held offers; called internally for inline responses.
  // Throws OfferExpiredError / OverCommitError per the offer contract.
  std::vector<TaskId> respond(const OfferId& id, const OfferResponse& response,
                              SimTime now);

  size_t expireOffers(SimTime now);
  size_t rescindAll(SimTime now);
  size_t rescindAgent(const AgentId& agentId, SimTime now);

  // Steps the task state machine and notifies the owning framework; terminal
  // transitions release agent resources and framework allocation.
  const TaskRecord& applyTransition(const TaskId& id, TaskEvent event,
                                    SimTime now);

  void crashAgent(const AgentId& id, SimTime now);
  void recoverAgent(const AgentId& id, SimTime now);

  ResourceVector frameworkAllocated(const FrameworkId& id) const;
  const std::map<OfferId, Offer>& outstandingOffers() const {
    return outstanding_;
  }
  uint64_t round() const { return roundCounter_; }
  std::vector<FrameworkId> fairOrder() const;

  struct Counters {
    uint64_t issued = 0;
    uint64_t accepted = 0;
    uint64_t declined = 0;
    uint64_t expired = 0;
    uint64_t rescinded = 0;
    uint64_t elections = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  bool backedOff(const AgentId& agentId, const FrameworkId& frameworkId) const;
  void returnToPool(const Offer& offer);
  FrameworkHandle* chooseRecipient(const AgentId& agentId,
                                   const std::vector<FrameworkHandle*>& order);

  Cluster& cluster_;
  MasterGroup& masters_;
  EventLog& log_;
  SimTime offerTtl_;

  std::vector<FrameworkHandle*> frameworks_;
  std::map<FrameworkId, FrameworkHandle*> byId_;
  std::map<FrameworkId, ResourceVector> allocated_;
  std::map<OfferId, Offer> outstanding_;
  // agent -> framework -> round in which that framework declined the agent;
  // the pair is skipped for exactly the following round.
  std::map<AgentId, std::map<FrameworkId, uint64_t>> declines_;
  std::optional<std::map<AgentId, FrameworkId>> staticBinding_;
  std::optional<std::string> schedulingLeader_;
  uint64_t roundCounter_ = 0;
  uint64_t offerCounter_ = 0;
  Counters counters_;
};

} // namespace offersched

#endif // OFFERSCHED_MASTER_HPP
