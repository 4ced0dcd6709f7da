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

#include "offersched/master.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "offersched/errors.hpp"

namespace offersched {

MasterGroup::MasterGroup(std::vector<MasterSpec> masters)
  : masters_(std::move(masters)) {
  if (masters_.size() != 3) {
    throw ValidationError("master group requires exactly 3 masters, got " +
                          std::to_string(masters_.size()));
  }
  std::sort(masters_.begin(), masters_.end(),
            [](const MasterSpec& a, const MasterSpec& b) {
              return a.id < b.id;
            });
  for (size_t i = 1; i < masters_.size(); i++) {
    if (masters_[i].id == masters_[i - 1].id) {
      throw ValidationError("duplicate master id " + masters_[i].id);
    }
  }
  alive_.assign(masters_.size(), true);
}

MasterGroup MasterGroup::makeDefault() {
  return MasterGroup({{"m1", "zone-a"}, {"m2", "zone-b"}, {"m3", "zone-c"}});
}

int MasterGroup::indexOf(const std::string& id) const {
  for (size_t i = 0; i < masters_.size(); i++) {
    if (masters_[i].id == id) {
      return static_cast<int>(i);
    }
  }
  throw Error("unknown master " + id);
}

bool MasterGroup::alive(const std::string& id) const {
  return alive_[indexOf(id)];
}

int MasterGroup::aliveCount() const {
  int count = 0;
  for (bool a : alive_) {
    count += a ? 1 : 0;
  }
  return count;
}

const std::string& MasterGroup::leader() const {
  for (size_t i = 0; i < masters_.size(); i++) {
    if (alive_[i]) {
      return masters_[i].id;
    }
  }
  throw Error("no alive master");
}

const std::string& MasterGroup::electLeader() const {
  if (!quorum()) {
    throw NoQuorumError("quorum lost: " + std::to_string(aliveCount()) +
                        " of 3 masters alive");
  }
  return leader();
}

void MasterGroup::crash(const std::string& id) {
  alive_[indexOf(id)] = false;
}

void MasterGroup::recover(const std::string& id) {
  alive_[indexOf(id)] = true;
}

bool shareLess(const Share& a, const Share& b) {
  // Cross multiplication keeps the comparison exact; denominators are
  // cluster totals and therefore positive.
  return static_cast<__int128>(a.num) * b.den <
         static_cast<__int128>(b.num) * a.den;
}

Share dominantShare(const ResourceVector& allocated,
                    const ResourceVector& clusterTotal) {
  Share best{0, 1};
  const std::pair<int64_t, int64_t> dims[] = {
      {allocated.millicores(), clusterTotal.millicores()},
      {allocated.memTenths(), clusterTotal.memTenths()},
      {allocated.diskTenths(), clusterTotal.diskTenths()},
  };
  for (const auto& [num, den] : dims) {
    if (den <= 0) {
      continue;
    }
    Share s{num, den};
    if (shareLess(best, s)) {
      best = s;
    }
  }
  return best;
}

std::vector<FrameworkId> sortFrameworksFair(
    const std::vector<std::pair<FrameworkId, ResourceVector>>& allocations,
    const ResourceVector& clusterTotal) {
  std::vector<std::pair<Share, FrameworkId>> keyed;
  keyed.reserve(allocations.size());
  for (const auto& [id, allocated] : allocations) {
    keyed.emplace_back(dominantShare(allocated, clusterTotal), id);
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) {
              if (shareLess(a.first, b.first)) {
                return true;
              }
              if (shareLess(b.first, a.first)) {
                return false;
              }
              return a.second < b.second;
            });
  std::vector<FrameworkId> order;
  order.reserve(keyed.size());
  for (const auto& [share, id] : keyed) {
    order.push_back(id);
  }
  return order;
}

Allocator::Allocator(Cluster& cluster, MasterGroup& masters, EventLog& log,
                     SimTime offerTtl)
  : cluster_(cluster), masters_(masters), log_(log), offerTtl_(offerTtl) {
  if (offerTtl_ <= 0) {
    throw ValidationError("offer ttl must be positive");
  }
}

void Allocator::registerFramework(FrameworkHandle* framework) {
  if (byId_.count(framework->id()) != 0) {
    throw ValidationError("duplicate framework id " + framework->id());
  }
  frameworks_.push_back(framework);
  byId_.emplace(framework->id(), framework);
  allocated_.emplace(framework->id(), ResourceVector());
  log_.append(0, "framework_registered", {{"framework", framework->id()}});
}

FrameworkHandle* Allocator::framework(const FrameworkId& id) const {
  auto it = byId_.find(id);
  if (it == byId_.end()) {
    throw Error("unknown framework " + id);
  }
  return it->second;
}

void Allocator::setStaticBinding(std::map<AgentId, FrameworkId> binding) {
  staticBinding_ = std::move(binding);
}

bool Allocator::backedOff(const AgentId& agentId,
                          const FrameworkId& frameworkId) const {
  auto agentIt = declines_.find(agentId);
  if (agentIt == declines_.end()) {
    return false;
  }
  auto it = agentIt->second.find(frameworkId);
  if (it == agentIt->second.end()) {
    return false;
  }
  // A decline in round R suppresses re-offering for round R+1 only.
  return it->second + 1 == roundCounter_;
}

FrameworkHandle* Allocator::chooseRecipient(
    const AgentId& agentId, const std::vector<FrameworkHandle*>& order) {
  if (staticBinding_) {
    auto it = staticBinding_->find(agentId);
    if (it == staticBinding_->end()) {
      return nullptr;
    }
    auto fw = byId_.find(it->second);
    if (fw == byId_.end()) {
      return nullptr;
    }
    if (!fw->second->wantsOffers() || backedOff(agentId, it->second)) {
      return nullptr;
    }
    return fw->second;
  }
  for (FrameworkHandle* fw : order) {
    if (!fw->wantsOffers()) {
      continue;
    }
    if (backedOff(agentId, fw->id())) {
      continue;
    }
    return fw;
  }
  return nullptr;
}

std::vector<FrameworkId> Allocator::fairOrder() const {
  std::vector<std::pair<FrameworkId, ResourceVector>> allocations;
  for (const auto& [id, alloc] : allocated_) {
    allocations.emplace_back(id, alloc);
  }
  return sortFrameworksFair(allocations, cluster_.totalAlive());
}

std::vector<Offer> Allocator::allocationRound(SimTime now) {
  masters_.electLeader(); // throws below quorum; nothing is issued
  roundCounter_++;

  const std::string& leader = masters_.leader();
  if (!schedulingLeader_ || *schedulingLeader_ != leader) {
    // Offers are leader state, not registry state: a new leader does not
    // know about them, so they are rescinded before it allocates.
    rescindAll(now);
    schedulingLeader_ = leader;
    counters_.elections++;
    log_.append(now, "leader_elected", {{"master", leader}});
  }

  expireOffers(now);

  std::vector<Offer> issued;
  for (const auto& [agentId, state] : cluster_.agents()) {
    if (!state.alive || state.free().empty()) {
      continue;
    }
    bool hasOutstanding = false;
    for (const auto& [oid, offer] : outstanding_) {
      if (offer.agentId == agentId) {
        hasOutstanding = true;
        break;
      }
    }
    if (hasOutstanding) {
      continue; // one live offer per agent at a time
    }

    // Recomputed per agent: an accept earlier in the round raises that
    // framework's dominant share and must influence the next pick.
    std::vector<FrameworkHandle*> order;
    for (const FrameworkId& id : fairOrder()) {
      order.push_back(byId_.at(id));
    }
    FrameworkHandle* recipient = chooseRecipient(agentId, order);
    if (recipient == nullptr) {
      continue;
    }

    Offer offer;
    offer.id = "o" + std::to_string(++offerCounter_);
    offer.agentId = agentId;
    offer.frameworkId = recipient->id();
    offer.resources = state.free();
    offer.attributes = state.spec.attributes;
    offer.issuedAt = now;
    offer.expiresAt = now + offerTtl_;

    cluster_.agent(agentId).offered += offer.resources;
    outstanding_.emplace(offer.id, offer);
    counters_.issued++;
    log_.append(now, "offer_issued",
        {{"offer", offer.id},
         {"agent", offer.agentId},
         {"framework", offer.frameworkId},
         {"resources", offer.resources.toJson()}});
    issued.push_back(offer);

    std::optional<OfferResponse> response = recipient->onOffer(offer, now);
    if (response) {
      respond(offer.id, *response, now);
    }
  }
  return issued;
}

void Allocator::returnToPool(const Offer& offer) {
  cluster_.agent(offer.agentId).offered -= offer.resources;
}

std::vector<TaskId> Allocator::respond(const OfferId& id,
                                       const OfferResponse& response,
                                       SimTime now) {
  auto it = outstanding_.find(id);
  if (it == outstanding_.end()) {
    throw OfferExpiredError("offer " + id + " is not outstanding");
  }
  Offer offer = it->second;
  if (now >= offer.expiresAt) {
    returnToPool(offer);
    outstanding_.erase(it);
    counters_.expired++;
    log_.append(now, "offer_expired",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
    throw OfferExpiredError("offer " + id + " expired at " +
                            std::to_string(offer.expiresAt));
  }

  if (!response.accepted) {
    returnToPool(offer);
    outstanding_.erase(it);
    declines_[offer.agentId][offer.frameworkId] = roundCounter_;
    counters_.declined++;
    log_.append(now, "offer_declined",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
    return {};
  }

  ResourceVector wanted;
  for (const TaskSpec& task : response.tasks) {
    wanted += task.request;
  }
  if (!offer.resources.contains(wanted)) {
    // Rejected wholesale and treated as a decline: nothing launches and the
    // offered resources go back to the agent's free pool.
    returnToPool(offer);
    outstanding_.erase(it);
    declines_[offer.agentId][offer.frameworkId] = roundCounter_;
    counters_.declined++;
    log_.append(now, "offer_declined",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
    throw OverCommitError("accept of offer " + id + " requests " +
                          wanted.toString() + " but offer holds " +
                          offer.resources.toString());
  }

  // The unused remainder of the offer falls back to the agent's free pool.
  returnToPool(offer);
  outstanding_.erase(it);

  std::vector<TaskId> launched;
  nlohmann::json taskIds = nlohmann::json::array();
  for (const TaskSpec& task : response.tasks) {
    cluster_.launch(offer.frameworkId, offer.agentId, task.taskId,
                    task.request, task.containerImage, task.containerPorts,
                    task.payload, now);
    allocated_[offer.frameworkId] += task.request;
    launched.push_back(task.taskId);
    taskIds.push_back(task.taskId);
  }
  counters_.accepted++;
  log_.append(now, "offer_accepted",
      {{"offer", offer.id}, {"agent", offer.agentId},
       {"framework", offer.frameworkId}, {"tasks", taskIds}});
  return launched;
}

size_t Allocator::expireOffers(SimTime now) {
  std::vector<OfferId> expired;
  for (const auto& [id, offer] : outstanding_) {
    if (offer.expiresAt <= now) {
      expired.push_back(id);
    }
  }
  for (const OfferId& id : expired) {
    Offer offer = outstanding_.at(id);
    returnToPool(offer);
    outstanding_.erase(id);
    counters_.expired++;
    log_.append(now, "offer_expired",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
  }
  return expired.size();
}

size_t Allocator::rescindAll(SimTime now) {
  std::vector<OfferId> ids;
  for (const auto& [id, offer] : outstanding_) {
    ids.push_back(id);
  }
  size_t count = 0;
  for (const OfferId& id : ids) {
    Offer offer = outstanding_.at(id);
    returnToPool(offer);
    outstanding_.erase(id);
    counters_.rescinded++;
    count++;
    log_.append(now, "offer_rescinded",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
  }
  return count;
}

size_t Allocator::rescindAgent(const AgentId& agentId, SimTime now) {
  std::vector<OfferId> ids;
  for (const auto& [id, offer] : outstanding_) {
    if (offer.agentId == agentId) {
      ids.push_back(id);
    }
  }
  for (const OfferId& id : ids) {
    Offer offer = outstanding_.at(id);
    returnToPool(offer);
    outstanding_.erase(id);
    counters_.rescinded++;
    log_.append(now, "offer_rescinded",
        {{"offer", offer.id}, {"agent", offer.agentId},
         {"framework", offer.frameworkId}});
  }
  return ids.size();
}

const TaskRecord& Allocator::applyTransition(const TaskId& id, TaskEvent event,
                                             SimTime now) {
  const TaskRecord& record = cluster_.transition(id, event, now);
  auto fw = byId_.find(record.frameworkId);
  if (record.state == TaskState::Running) {
    if (fw != byId_.end()) {
      fw->second->onTaskRunning(record, now);
    }
  } else if (isTerminal(record.state)) {
    allocated_.at(record.frameworkId) -= record.request;
    if (fw != byId_.end()) {
      fw->second->onTaskTerminal(record, now);
    }
  }
  return record;
}

void Allocator::crashAgent(const AgentId& id, SimTime now) {
  rescindAgent(id, now);
  std::vector<TaskId> onAgent(cluster_.agent(id).tasks.begin(),
                              cluster_.agent(id).tasks.end());
  for (const TaskId& taskId : onAgent) {
    applyTransition(taskId, TaskEvent::AgentLost, now);
  }
  cluster_.markDead(id, now);
}

void Allocator::recoverAgent(const AgentId& id, SimTime now) {
  cluster_.markAlive(id, now);
}

ResourceVector Allocator::frameworkAllocated(const FrameworkId& id) const {
  auto it = allocated_.find(id);
  if (it == allocated_.end()) {
    throw Error("unknown framework " + id);
  }
  return it->second;
}

} // namespace offersched
