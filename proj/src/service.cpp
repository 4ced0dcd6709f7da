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

#include "offersched/service.hpp"

#include <algorithm>

#include "offersched/errors.hpp"

namespace offersched {

std::string toString(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::Unique: return "UNIQUE";
    case ConstraintOp::Cluster: return "CLUSTER";
    case ConstraintOp::Like: return "LIKE";
  }
  return "?";
}

namespace {

void validateAppDefinition(const AppDefinition& def) {
  if (def.id.empty()) {
    throw ValidationError("app id is required");
  }
  if (def.id.front() != '/' || def.id.size() < 2) {
    throw ValidationError("app id must be a path like /name, got " + def.id);
  }
  if (def.instances < 0) {
    throw ValidationError("app " + def.id + " instances must be >= 0");
  }
  if (def.request.millicores() <= 0 || def.request.memTenths() <= 0) {
    throw ValidationError("app " + def.id + " needs cpus > 0 and mem > 0");
  }
  for (int port : def.ports) {
    if (port <= 0 || port > 65535) {
      throw ValidationError("app " + def.id + " has invalid port " +
                            std::to_string(port));
    }
  }
  for (size_t i = 0; i < def.ports.size(); i++) {
    for (size_t j = i + 1; j < def.ports.size(); j++) {
      if (def.ports[i] == def.ports[j]) {
        throw ValidationError("app " + def.id + " repeats port " +
                              std::to_string(def.ports[i]));
      }
    }
  }
  for (const Constraint& c : def.constraints) {
    if (c.field.empty()) {
      throw ValidationError("app " + def.id + " constraint field is empty");
    }
    if (c.op == ConstraintOp::Unique && !c.value.empty()) {
      throw ValidationError("app " + def.id + " UNIQUE constraint on " +
                            c.field + " takes no value");
    }
    if (c.op != ConstraintOp::Unique && c.value.empty()) {
      throw ValidationError("app " + def.id + " " + toString(c.op) +
                            " constraint on " + c.field + " needs a value");
    }
  }
  if (def.healthCheck) {
    if (def.healthCheck->interval <= 0) {
      throw ValidationError("app " + def.id + " health interval must be > 0");
    }
    if (def.healthCheck->threshold < 1) {
      throw ValidationError("app " + def.id + " health threshold must be >= 1");
    }
  }
}

void rejectUnknownKeys(const nlohmann::json& doc,
                       const std::vector<std::string>& known,
                       const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown key \"" + key + "\" in " + where);
    }
  }
}

double numberField(const nlohmann::json& doc, const std::string& key,
                   const std::string& where) {
  if (!doc.at(key).is_number()) {
    throw ValidationError(where + "." + key + " must be a number");
  }
  return doc.at(key).get<double>();
}

int64_t intField(const nlohmann::json& doc, const std::string& key,
                 const std::string& where) {
  if (!doc.at(key).is_number_integer()) {
    throw ValidationError(where + "." + key + " must be an integer");
  }
  return doc.at(key).get<int64_t>();
}

} // namespace

AppDefinition appFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw ValidationError("app definition must be a JSON object");
  }
  rejectUnknownKeys(doc,
      {"id", "instances", "cpus", "mem", "container", "ports", "volumes",
       "constraints", "healthCheck"},
      "app definition");
  if (!doc.contains("id")) {
    throw ValidationError("app definition is missing \"id\"");
  }
  if (!doc.at("id").is_string()) {
    throw ValidationError("app id must be a string");
  }

  AppDefinition def;
  def.id = doc.at("id").get<std::string>();
  const std::string where = "app " + def.id;

  if (doc.contains("instances")) {
    int64_t n = intField(doc, "instances", where);
    if (n < 0) {
      throw ValidationError(where + " instances must be >= 0");
    }
    def.instances = static_cast<int>(n);
  }
  double cpus = doc.contains("cpus") ? numberField(doc, "cpus", where) : 1.0;
  double mem = doc.contains("mem") ? numberField(doc, "mem", where) : 128.0;
  def.request = ResourceVector::of(cpus, mem);

  if (doc.contains("container")) {
    if (!doc.at("container").is_string()) {
      throw ValidationError(where + ".container must be a string label");
    }
    def.containerImage = doc.at("container").get<std::string>();
  }
  if (doc.contains("ports")) {
    if (!doc.at("ports").is_array()) {
      throw ValidationError(where + ".ports must be an array");
    }
    for (const auto& p : doc.at("ports")) {
      if (!p.is_number_integer()) {
        throw ValidationError(where + ".ports entries must be integers");
      }
      def.ports.push_back(p.get<int>());
    }
  }
  if (doc.contains("volumes")) {
    if (!doc.at("volumes").is_array()) {
      throw ValidationError(where + ".volumes must be an array");
    }
    for (const auto& v : doc.at("volumes")) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_string() ||
          !v[1].is_string()) {
        throw ValidationError(where +
                              ".volumes entries must be [host, container]");
      }
      def.volumes.push_back({v[0].get<std::string>(),
                             v[1].get<std::string>()});
    }
  }
  if (doc.contains("constraints")) {
    if (!doc.at("constraints").is_array()) {
      throw ValidationError(where + ".constraints must be an array");
    }
    for (const auto& c : doc.at("constraints")) {
      if (!c.is_array() || c.size() < 2 || c.size() > 3 ||
          !c[0].is_string() || !c[1].is_string()) {
        throw ValidationError(where +
            ".constraints entries must be [field, operator] or "
            "[field, operator, value]");
      }
      Constraint parsed;
      parsed.field = c[0].get<std::string>();
      std::string op = c[1].get<std::string>();
      if (op == "UNIQUE") {
        parsed.op = ConstraintOp::Unique;
        if (c.size() == 3) {
          throw ValidationError(where + " UNIQUE constraint on " +
                                parsed.field + " takes no value");
        }
      } else if (op == "CLUSTER" || op == "LIKE") {
        parsed.op = op == "CLUSTER" ? ConstraintOp::Cluster : ConstraintOp::Like;
        if (c.size() != 3 || !c[2].is_string()) {
          throw ValidationError(where + " " + op + " constraint on " +
                                parsed.field + " needs a string value");
        }
        parsed.value = c[2].get<std::string>();
      } else {
        throw ValidationError(where + " has unknown constraint operator " + op);
      }
      def.constraints.push_back(parsed);
    }
  }
  if (doc.contains("healthCheck")) {
    const auto& hc = doc.at("healthCheck");
    if (!hc.is_object()) {
      throw ValidationError(where + ".healthCheck must be an object");
    }
    rejectUnknownKeys(hc, {"interval", "threshold"}, where + ".healthCheck");
    HealthCheckSpec spec;
    if (hc.contains("interval")) {
      double s = numberField(hc, "interval", where + ".healthCheck");
      spec.interval = static_cast<SimTime>(s * 1000.0);
    }
    if (hc.contains("threshold")) {
      spec.threshold = static_cast<int>(
          intField(hc, "threshold", where + ".healthCheck"));
    }
    def.healthCheck = spec;
  }

  validateAppDefinition(def);
  return def;
}

AppDefinition parseAppDefinition(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed app definition: ") + e.what());
  }
  return appFromJson(doc);
}

namespace {

bool globMatch(const std::string& pattern, const std::string& value) {
  size_t p = 0, v = 0;
  size_t starP = std::string::npos, starV = 0;
  while (v < value.size()) {
    if (p < pattern.size() &&
        (pattern[p] == value[v] || pattern[p] == '*')) {
      if (pattern[p] == '*') {
        starP = p++;
        starV = v;
      } else {
        p++;
        v++;
      }
    } else if (starP != std::string::npos) {
      p = starP + 1;
      v = ++starV;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') {
    p++;
  }
  return p == pattern.size();
}

} // namespace

bool likeMatch(const std::string& pattern, const std::string& value) {
  size_t start = 0;
  while (true) {
    size_t bar = pattern.find('|', start);
    std::string branch = pattern.substr(
        start, bar == std::string::npos ? std::string::npos : bar - start);
    if (globMatch(branch, value)) {
      return true;
    }
    if (bar == std::string::npos) {
      return false;
    }
    start = bar + 1;
  }
}

namespace {

std::string fieldValue(const AgentSpec& agent, const std::string& field,
                       bool* present) {
  if (field == "hostname") {
    *present = true;
    return agent.id;
  }
  auto it = agent.attributes.find(field);
  if (it == agent.attributes.end()) {
    *present = false;
    return "";
  }
  *present = true;
  return it->second;
}

} // namespace

bool evaluateConstraints(const AppDefinition& app, const AgentSpec& candidate,
                         const std::vector<AgentSpec>& placed) {
  for (const Constraint& c : app.constraints) {
    bool present = false;
    std::string value = fieldValue(candidate, c.field, &present);
    if (!present && c.op != ConstraintOp::Unique) {
      throw UnknownFieldError("agent " + candidate.id +
                              " has no attribute " + c.field);
    }
    switch (c.op) {
      case ConstraintOp::Unique:
        for (const AgentSpec& other : placed) {
          bool otherPresent = false;
          if (fieldValue(other, c.field, &otherPresent) == value) {
            return false;
          }
        }
        break;
      case ConstraintOp::Cluster:
        if (value != c.value) {
          return false;
        }
        break;
      case ConstraintOp::Like:
        if (!likeMatch(c.value, value)) {
          return false;
        }
        break;
    }
  }
  return true;
}

ServiceFramework::ServiceFramework(FrameworkId id, Cluster& cluster,
                                   EventLog& log, TaskOps& taskOps)
  : id_(std::move(id)), name_("services"), cluster_(cluster), log_(log),
    taskOps_(taskOps) {}

ServiceFramework::ManagedApp& ServiceFramework::managed(
    const std::string& appId) {
  auto it = apps_.find(appId);
  if (it == apps_.end()) {
    throw UnknownAppError("unknown app " + appId);
  }
  return it->second;
}

const ServiceFramework::ManagedApp& ServiceFramework::managed(
    const std::string& appId) const {
  return const_cast<ServiceFramework*>(this)->managed(appId);
}

void ServiceFramework::killInstances(ManagedApp& app,
                                     const std::vector<TaskId>& taskIds,
                                     SimTime now) {
  (void)app; // instances are erased by the reentrant onTaskTerminal
  for (const TaskId& taskId : taskIds) {
    taskOps_.killTask(taskId, now);
  }
}

int ServiceFramework::deploy(const AppDefinition& definition, SimTime now) {
  validateAppDefinition(definition);
  auto it = apps_.find(definition.id);
  if (it == apps_.end()) {
    ManagedApp app;
    app.def = definition;
    app.version = 1;
    app.createdSeq = appCounter_++;
    app.history.push_back({1, now, definition});
    apps_.emplace(definition.id, std::move(app));
    log_.append(now, "app_deployed", {{"app", definition.id}, {"version", 1}});
    return 1;
  }
  // Stop-then-start replacement: every live instance of the old definition
  // is killed; the deficit is refilled from future offers.
  ManagedApp& app = it->second;
  std::vector<TaskId> live;
  for (const ServiceInstance& inst : app.instances) {
    live.push_back(inst.taskId);
  }
  killInstances(app, live, now);
  app.def = definition;
  app.version++;
  app.history.push_back({app.version, now, definition});
  log_.append(now, "app_deployed",
      {{"app", definition.id}, {"version", app.version}});
  return app.version;
}

int ServiceFramework::scale(const std::string& appId, int instances,
                            SimTime now) {
  if (instances < 0) {
    throw ValidationError("instances must be >= 0");
  }
  ManagedApp& app = managed(appId);
  app.def.instances = instances;
  app.version++;
  app.history.push_back({app.version, now, app.def});
  int surplus = static_cast<int>(app.instances.size()) - instances;
  if (surplus > 0) {
    std::vector<const ServiceInstance*> sorted;
    for (const ServiceInstance& inst : app.instances) {
      sorted.push_back(&inst);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const ServiceInstance* a, const ServiceInstance* b) {
                return a->seq > b->seq; // newest first
              });
    std::vector<TaskId> victims;
    for (int i = 0; i < surplus; i++) {
      victims.push_back(sorted[static_cast<size_t>(i)]->taskId);
    }
    killInstances(app, victims, now);
  }
  log_.append(now, "app_scaled",
      {{"app", appId}, {"instances", instances}, {"version", app.version}});
  return app.version;
}

int ServiceFramework::rollback(const std::string& appId, int version,
                               SimTime now) {
  ManagedApp& app = managed(appId);
  const DeploymentRecord* target = nullptr;
  for (const DeploymentRecord& rec : app.history) {
    if (rec.version == version) {
      target = &rec;
      break;
    }
  }
  if (target == nullptr) {
    throw UnknownVersionError("app " + appId + " has no version " +
                              std::to_string(version));
  }
  AppDefinition snapshot = target->definition;
  std::vector<TaskId> live;
  for (const ServiceInstance& inst : app.instances) {
    live.push_back(inst.taskId);
  }
  killInstances(app, live, now);
  app.def = snapshot;
  app.version++;
  app.history.push_back({app.version, now, snapshot});
  log_.append(now, "app_rolled_back",
      {{"app", appId}, {"to", version}, {"version", app.version}});
  return app.version;
}

bool ServiceFramework::hasApp(const std::string& appId) const {
  return apps_.count(appId) != 0;
}

const AppDefinition& ServiceFramework::definition(
    const std::string& appId) const {
  return managed(appId).def;
}

int ServiceFramework::version(const std::string& appId) const {
  return managed(appId).version;
}

const std::vector<DeploymentRecord>& ServiceFramework::history(
    const std::string& appId) const {
  return managed(appId).history;
}

std::vector<std::string> ServiceFramework::appIds() const {
  std::vector<std::pair<uint64_t, std::string>> keyed;
  for (const auto& [id, app] : apps_) {
    keyed.emplace_back(app.createdSeq, id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> ids;
  for (const auto& [seq, id] : keyed) {
    ids.push_back(id);
  }
  return ids;
}

const std::vector<ServiceInstance>& ServiceFramework::instances(
    const std::string& appId) const {
  return managed(appId).instances;
}

int ServiceFramework::liveCount(const std::string& appId) const {
  return static_cast<int>(managed(appId).instances.size());
}

int ServiceFramework::runningCount(const std::string& appId) const {
  int count = 0;
  for (const ServiceInstance& inst : managed(appId).instances) {
    count += inst.state == TaskState::Running ? 1 : 0;
  }
  return count;
}

int ServiceFramework::deficit(const ManagedApp& app) const {
  return app.def.instances - static_cast<int>(app.instances.size());
}

std::string ServiceFramework::taskPrefix(const std::string& appId) {
  std::string san = appId;
  std::replace(san.begin(), san.end(), '/', '_');
  size_t i = 0;
  while (i < san.size() && san[i] == '_') {
    i++;
  }
  san = san.substr(i);
  if (san.empty()) {
    san = "app";
  }
  auto it = prefixOwner_.find(san);
  if (it == prefixOwner_.end()) {
    prefixOwner_.emplace(san, appId);
    return san;
  }
  if (it->second == appId) {
    return san;
  }
  // Two app ids sanitize to the same prefix; the creation sequence keeps
  // task ids unique.
  return san + "-" + std::to_string(apps_.at(appId).createdSeq);
}

bool ServiceFramework::wantsOffers() const {
  for (const auto& [id, app] : apps_) {
    if (deficit(app) > 0) {
      return true;
    }
  }
  return false;
}

std::optional<OfferResponse> ServiceFramework::onOffer(const Offer& offer,
                                                       SimTime now) {
  (void)now;
  AgentSpec candidate;
  candidate.id = offer.agentId;
  candidate.attributes = offer.attributes;

  ResourceVector remaining = offer.resources;
  std::vector<TaskSpec> specs;
  for (const std::string& appId : appIds()) {
    ManagedApp& app = apps_.at(appId);
    std::vector<AgentSpec> placed;
    for (const ServiceInstance& inst : app.instances) {
      placed.push_back(cluster_.agent(inst.agentId).spec);
    }
    // deficit() shrinks as instances are appended below, so it alone
    // bounds the loop.
    while (deficit(app) > 0) {
      if (!remaining.contains(app.def.request)) {
        break;
      }
      bool ok = false;
      try {
        ok = evaluateConstraints(app.def, candidate, placed);
      } catch (const UnknownFieldError&) {
        ok = false;
      }
      if (!ok) {
        break;
      }
      uint64_t seq = app.instanceCounter++;
      TaskId taskId = taskPrefix(appId) + "." + std::to_string(seq);
      TaskSpec spec;
      spec.taskId = taskId;
      spec.request = app.def.request;
      spec.containerImage = app.def.containerImage;
      spec.containerPorts = app.def.ports;
      spec.payload = appId;
      specs.push_back(spec);

      ServiceInstance inst;
      inst.taskId = taskId;
      inst.agentId = offer.agentId;
      inst.seq = seq;
      inst.state = TaskState::Staging;
      app.instances.push_back(inst);
      taskToApp_.emplace(taskId, appId);

      remaining -= app.def.request;
      placed.push_back(candidate);
    }
  }
  if (specs.empty()) {
    return OfferResponse::decline();
  }
  return OfferResponse::accept(std::move(specs));
}

void ServiceFramework::onTaskRunning(const TaskRecord& task, SimTime now) {
  auto it = taskToApp_.find(task.id);
  if (it == taskToApp_.end()) {
    return;
  }
  ManagedApp& app = apps_.at(it->second);
  for (ServiceInstance& inst : app.instances) {
    if (inst.taskId == task.id) {
      inst.state = TaskState::Running;
      inst.ports = task.ports;
      inst.consecutiveFailures = 0;
      if (app.def.healthCheck) {
        inst.nextProbeAt = now + app.def.healthCheck->interval;
      }
      break;
    }
  }
}

void ServiceFramework::onTaskTerminal(const TaskRecord& task, SimTime now) {
  (void)now;
  auto it = taskToApp_.find(task.id);
  if (it == taskToApp_.end()) {
    return;
  }
  ManagedApp& app = apps_.at(it->second);
  app.instances.erase(
      std::remove_if(app.instances.begin(), app.instances.end(),
                     [&](const ServiceInstance& inst) {
                       return inst.taskId == task.id;
                     }),
      app.instances.end());
  taskToApp_.erase(it);
}

void ServiceFramework::runHealthChecks(SimTime now) {
  for (auto& [id, app] : apps_) {
    if (!app.def.healthCheck) {
      continue;
    }
    for (ServiceInstance& inst : app.instances) {
      if (inst.state != TaskState::Running || inst.nextProbeAt < 0 ||
          now < inst.nextProbeAt) {
        continue;
      }
      // Probes pass unless a failure was reported through reportHealth.
      inst.consecutiveFailures = 0;
      inst.nextProbeAt = now + app.def.healthCheck->interval;
    }
  }
}

void ServiceFramework::reportHealth(const TaskId& taskId, bool healthy,
                                    SimTime now) {
  auto it = taskToApp_.find(taskId);
  if (it == taskToApp_.end()) {
    throw Error("unknown task " + taskId);
  }
  ManagedApp& app = apps_.at(it->second);
  if (!app.def.healthCheck) {
    throw Error("app " + it->second + " has no health check configured");
  }
  for (ServiceInstance& inst : app.instances) {
    if (inst.taskId != taskId) {
      continue;
    }
    if (healthy) {
      inst.consecutiveFailures = 0;
      return;
    }
    inst.consecutiveFailures++;
    if (inst.consecutiveFailures >= app.def.healthCheck->threshold) {
      log_.append(now, "health_killed", {{"app", it->second}, {"task", taskId}});
      taskOps_.killTask(taskId, now);
    }
    return;
  }
}

std::optional<TaskId> ServiceFramework::pickVictim(
    const std::string& appId) const {
  const ManagedApp& app = managed(appId);
  const ServiceInstance* victim = nullptr;
  for (const ServiceInstance& inst : app.instances) {
    if (inst.state != TaskState::Running) {
      continue;
    }
    if (victim == nullptr || inst.seq < victim->seq) {
      victim = &inst;
    }
  }
  if (victim == nullptr) {
    return std::nullopt;
  }
  return victim->taskId;
}

std::vector<Endpoint> ServiceFramework::endpoints() const {
  std::vector<Endpoint> out;
  for (const auto& [id, app] : apps_) {
    for (const ServiceInstance& inst : app.instances) {
      if (inst.state != TaskState::Running) {
        continue;
      }
      for (const PortMapping& m : inst.ports) {
        out.push_back({id, inst.agentId, m.hostPort});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace offersched
