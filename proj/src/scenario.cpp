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

#include "offersched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "offersched/errors.hpp"

namespace offersched {

std::string toString(Policy policy) {
  return policy == Policy::Dynamic ? "dynamic" : "static";
}

std::string toString(FailureKind kind) {
  switch (kind) {
    case FailureKind::AgentCrash: return "agent-crash";
    case FailureKind::AgentRecover: return "agent-recover";
    case FailureKind::MasterCrash: return "master-crash";
    case FailureKind::MasterRecover: return "master-recover";
    case FailureKind::TaskFail: return "task-fail";
  }
  return "?";
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t hash = 14695981039346656037ull;
  for (char c : text) {
    hash ^= static_cast<uint8_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

SimTime RngStream::nextExpGapMs(double ratePerMs) {
  double u = nextUnit();
  while (u <= 0.0) {
    u = nextUnit();
  }
  double gap = -std::log(u) / ratePerMs;
  SimTime ms = static_cast<SimTime>(std::llround(gap));
  return ms < 1 ? 1 : ms;
}

namespace {

void expectKeys(const nlohmann::json& doc,
                const std::vector<std::string>& known,
                const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ScenarioValidationError("unknown key \"" + key + "\" in " + where);
    }
  }
}

// Durations and timestamps are written in seconds; internally everything is
// integer milliseconds, and fractions finer than 1 ms are rejected.
SimTime secondsToMs(const nlohmann::json& value, const std::string& where) {
  if (!value.is_number()) {
    throw ScenarioValidationError(where + " must be a number of seconds");
  }
  double seconds = value.get<double>();
  double ms = seconds * 1000.0;
  double rounded = std::nearbyint(ms);
  if (std::abs(ms - rounded) > 1e-6) {
    throw ScenarioValidationError(where + " is finer than 1 ms resolution");
  }
  return static_cast<SimTime>(rounded);
}

AgentSpec parseAgent(const nlohmann::json& doc, size_t index) {
  const std::string where = "agents[" + std::to_string(index) + "]";
  if (!doc.is_object()) {
    throw ScenarioValidationError(where + " must be an object");
  }
  expectKeys(doc, {"id", "cpus", "mem", "disk", "attributes", "zone"}, where);
  for (const char* key : {"id", "cpus", "mem"}) {
    if (!doc.contains(key)) {
      throw ScenarioValidationError(where + " is missing \"" + std::string(key) + "\"");
    }
  }
  AgentSpec spec;
  if (!doc.at("id").is_string()) {
    throw ScenarioValidationError(where + ".id must be a string");
  }
  spec.id = doc.at("id").get<std::string>();
  double cpus = doc.at("cpus").get<double>();
  double mem = doc.at("mem").get<double>();
  double disk = doc.contains("disk") ? doc.at("disk").get<double>() : 0.0;
  spec.total = ResourceVector::of(cpus, mem, disk);
  if (doc.contains("attributes")) {
    if (!doc.at("attributes").is_object()) {
      throw ScenarioValidationError(where + ".attributes must be an object");
    }
    for (const auto& [name, value] : doc.at("attributes").items()) {
      if (!value.is_string() || value.get<std::string>().empty()) {
        throw ScenarioValidationError(where + ".attributes." + name +
                                      " must be a non-empty string");
      }
      spec.attributes.emplace(name, value.get<std::string>());
    }
  }
  if (doc.contains("zone")) {
    spec.zone = doc.at("zone").get<std::string>();
  }
  return spec;
}

QueueConfig parseQueue(const nlohmann::json& doc, size_t index) {
  const std::string where = "queues[" + std::to_string(index) + "]";
  if (!doc.is_object()) {
    throw ScenarioValidationError(where + " must be an object");
  }
  expectKeys(doc,
      {"label", "cpus", "mem", "image", "maxBuilders", "idleTimeout", "weight"},
      where);
  for (const char* key : {"label", "cpus", "mem", "maxBuilders"}) {
    if (!doc.contains(key)) {
      throw ScenarioValidationError(where + " is missing \"" + std::string(key) + "\"");
    }
  }
  QueueConfig config;
  config.label = doc.at("label").get<std::string>();
  config.request = ResourceVector::of(doc.at("cpus").get<double>(),
                                      doc.at("mem").get<double>());
  if (doc.contains("image")) {
    config.containerImage = doc.at("image").get<std::string>();
  }
  if (!doc.at("maxBuilders").is_number_integer()) {
    throw ScenarioValidationError(where + ".maxBuilders must be an integer");
  }
  config.maxBuilders = doc.at("maxBuilders").get<int>();
  if (doc.contains("idleTimeout")) {
    config.idleTimeout = secondsToMs(doc.at("idleTimeout"),
                                     where + ".idleTimeout");
  }
  if (doc.contains("weight")) {
    if (!doc.at("weight").is_number_integer()) {
      throw ScenarioValidationError(where + ".weight must be an integer");
    }
    config.weight = doc.at("weight").get<int>();
  }
  return config;
}

WorkloadSpec parseWorkload(const nlohmann::json& doc, size_t index) {
  const std::string where = "workload[" + std::to_string(index) + "]";
  if (!doc.is_object()) {
    throw ScenarioValidationError(where + " must be an object");
  }
  expectKeys(doc, {"kind", "label", "duration", "arrivals"}, where);
  for (const char* key : {"kind", "label", "duration", "arrivals"}) {
    if (!doc.contains(key)) {
      throw ScenarioValidationError(where + " is missing \"" + std::string(key) + "\"");
    }
  }
  WorkloadSpec spec;
  spec.kind = doc.at("kind").get<std::string>();
  if (spec.kind != "release" && spec.kind != "ib" && spec.kind != "pr-test") {
    throw ScenarioValidationError(where + ".kind must be release, ib, or "
                                  "pr-test, got " + spec.kind);
  }
  spec.label = doc.at("label").get<std::string>();
  spec.duration = secondsToMs(doc.at("duration"), where + ".duration");
  if (spec.duration <= 0) {
    throw ScenarioValidationError(where + ".duration must be > 0");
  }

  const nlohmann::json& arrivals = doc.at("arrivals");
  if (!arrivals.is_object()) {
    throw ScenarioValidationError(where + ".arrivals must be an object");
  }
  expectKeys(arrivals, {"type", "ratePerDay", "ratePerMonth", "times"},
             where + ".arrivals");
  if (!arrivals.contains("type")) {
    throw ScenarioValidationError(where + ".arrivals is missing \"type\"");
  }
  std::string type = arrivals.at("type").get<std::string>();
  if (type == "poisson") {
    spec.arrivals.type = ArrivalSpec::Type::Poisson;
    bool perDay = arrivals.contains("ratePerDay");
    bool perMonth = arrivals.contains("ratePerMonth");
    if (perDay == perMonth) {
      throw ScenarioValidationError(where + ".arrivals needs exactly one of "
                                    "ratePerDay and ratePerMonth");
    }
    if (arrivals.contains("times")) {
      throw ScenarioValidationError(where +
                                    ".arrivals: poisson takes no times list");
    }
    if (perDay) {
      spec.arrivals.ratePerDay = arrivals.at("ratePerDay").get<double>();
    } else {
      // A month is 30 days for rate conversion.
      spec.arrivals.ratePerDay = arrivals.at("ratePerMonth").get<double>() / 30.0;
    }
    if (spec.arrivals.ratePerDay <= 0.0) {
      throw ScenarioValidationError(where + ".arrivals rate must be > 0");
    }
  } else if (type == "timeline") {
    spec.arrivals.type = ArrivalSpec::Type::Timeline;
    if (arrivals.contains("ratePerDay") || arrivals.contains("ratePerMonth")) {
      throw ScenarioValidationError(where +
                                    ".arrivals: timeline takes no rate");
    }
    if (!arrivals.contains("times") || !arrivals.at("times").is_array()) {
      throw ScenarioValidationError(where +
                                    ".arrivals needs a times array");
    }
    for (const auto& t : arrivals.at("times")) {
      SimTime at = secondsToMs(t, where + ".arrivals.times");
      if (at < 0) {
        throw ScenarioValidationError(where + ".arrivals.times must be >= 0");
      }
      spec.arrivals.timeline.push_back(at);
    }
    std::sort(spec.arrivals.timeline.begin(), spec.arrivals.timeline.end());
  } else {
    throw ScenarioValidationError(where + ".arrivals.type must be poisson or "
                                  "timeline, got " + type);
  }
  return spec;
}

FailureSpec parseFailure(const nlohmann::json& doc, size_t index) {
  const std::string where = "failures[" + std::to_string(index) + "]";
  if (!doc.is_object()) {
    throw ScenarioValidationError(where + " must be an object");
  }
  expectKeys(doc, {"time", "kind", "target"}, where);
  for (const char* key : {"time", "kind", "target"}) {
    if (!doc.contains(key)) {
      throw ScenarioValidationError(where + " is missing \"" + std::string(key) + "\"");
    }
  }
  FailureSpec spec;
  spec.at = secondsToMs(doc.at("time"), where + ".time");
  if (spec.at < 0) {
    throw ScenarioValidationError(where + ".time must be >= 0");
  }
  std::string kind = doc.at("kind").get<std::string>();
  if (kind == "agent-crash") {
    spec.kind = FailureKind::AgentCrash;
  } else if (kind == "agent-recover") {
    spec.kind = FailureKind::AgentRecover;
  } else if (kind == "master-crash") {
    spec.kind = FailureKind::MasterCrash;
  } else if (kind == "master-recover") {
    spec.kind = FailureKind::MasterRecover;
  } else if (kind == "task-fail") {
    spec.kind = FailureKind::TaskFail;
  } else {
    throw ScenarioValidationError(where + ".kind is not a failure kind: " +
                                  kind);
  }
  spec.target = doc.at("target").get<std::string>();
  return spec;
}

void validateScenario(Scenario& scenario) {
  if (scenario.duration <= 0) {
    throw ScenarioValidationError("duration must be > 0");
  }
  if (scenario.agents.empty()) {
    throw ScenarioValidationError("at least one agent is required");
  }
  std::set<AgentId> agentIds;
  for (const AgentSpec& agent : scenario.agents) {
    if (!agentIds.insert(agent.id).second) {
      throw ScenarioValidationError("duplicate agent id " + agent.id);
    }
  }
  std::set<std::string> masterIds;
  for (const MasterSpec& master : scenario.masters) {
    if (!masterIds.insert(master.id).second) {
      throw ScenarioValidationError("duplicate master id " + master.id);
    }
  }
  if (masterIds.empty()) {
    masterIds = {"m1", "m2", "m3"};
  }

  std::set<std::string> labels;
  for (const QueueConfig& queue : scenario.queues) {
    if (!labels.insert(queue.label).second) {
      throw ScenarioValidationError("duplicate queue label " + queue.label);
    }
  }
  std::set<std::string> appIds;
  for (const AppDefinition& app : scenario.apps) {
    if (!appIds.insert(app.id).second) {
      throw ScenarioValidationError("duplicate app id " + app.id);
    }
  }

  std::set<std::pair<std::string, std::string>> workloadKeys;
  for (const WorkloadSpec& spec : scenario.workload) {
    if (labels.count(spec.label) == 0) {
      throw ScenarioValidationError("workload references unknown queue label " +
                                    spec.label);
    }
    // One entry per (kind, label) keeps arrival stream names stable.
    if (!workloadKeys.insert({spec.kind, spec.label}).second) {
      throw ScenarioValidationError("duplicate workload entry for kind " +
                                    spec.kind + " label " + spec.label);
    }
    for (SimTime at : spec.arrivals.timeline) {
      if (at > scenario.duration) {
        throw ScenarioValidationError("workload timeline arrival past the "
                                      "scenario duration");
      }
    }
  }

  if (scenario.policy == Policy::Static) {
    if (!scenario.staticMap) {
      throw MissingStaticMapError(
          "policy is static but the scenario has no staticMap");
    }
  }
  if (scenario.staticMap) {
    std::set<AgentId> pooled;
    for (const auto& [pool, members] : *scenario.staticMap) {
      if (pool != "services" && labels.count(pool) == 0) {
        throw ScenarioValidationError("staticMap pool \"" + pool +
                                      "\" is neither a queue label nor "
                                      "\"services\"");
      }
      if (pool == "services" && scenario.apps.empty()) {
        throw ScenarioValidationError(
            "staticMap has a services pool but the scenario has no apps");
      }
      for (const AgentId& id : members) {
        if (agentIds.count(id) == 0) {
          throw ScenarioValidationError("staticMap pool \"" + pool +
                                        "\" lists unknown agent " + id);
        }
        if (!pooled.insert(id).second) {
          throw ScenarioValidationError("agent " + id +
                                        " appears in two staticMap pools");
        }
      }
    }
  }

  for (const FailureSpec& failure : scenario.failures) {
    switch (failure.kind) {
      case FailureKind::AgentCrash:
      case FailureKind::AgentRecover:
        if (agentIds.count(failure.target) == 0) {
          throw UnknownTargetError("failure target is not an agent: " +
                                   failure.target);
        }
        break;
      case FailureKind::MasterCrash:
      case FailureKind::MasterRecover:
        if (masterIds.count(failure.target) == 0) {
          throw UnknownTargetError("failure target is not a master: " +
                                   failure.target);
        }
        break;
      case FailureKind::TaskFail:
        if (appIds.count(failure.target) == 0) {
          throw UnknownTargetError("task-fail target is not an app: " +
                                   failure.target);
        }
        break;
    }
  }
}

} // namespace

Scenario parseScenario(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ScenarioValidationError("scenario must be a JSON object");
  }
  expectKeys(doc,
      {"seed", "duration", "agents", "masters", "policy", "staticMap",
       "queues", "apps", "workload", "failures", "offerTtl", "proxyPeriod"},
      "scenario");
  for (const char* key : {"seed", "duration", "agents", "policy"}) {
    if (!doc.contains(key)) {
      throw ScenarioValidationError(std::string("scenario is missing \"") + key + "\"");
    }
  }

  Scenario scenario;
  if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
    throw ScenarioValidationError("seed must be an integer");
  }
  scenario.seed = doc.at("seed").get<uint64_t>();
  scenario.duration = secondsToMs(doc.at("duration"), "duration");

  if (!doc.at("agents").is_array()) {
    throw ScenarioValidationError("agents must be an array");
  }
  for (size_t i = 0; i < doc.at("agents").size(); i++) {
    scenario.agents.push_back(parseAgent(doc.at("agents")[i], i));
  }

  if (doc.contains("masters")) {
    if (!doc.at("masters").is_array()) {
      throw ScenarioValidationError("masters must be an array");
    }
    for (size_t i = 0; i < doc.at("masters").size(); i++) {
      const auto& m = doc.at("masters")[i];
      const std::string where = "masters[" + std::to_string(i) + "]";
      expectKeys(m, {"id", "zone"}, where);
      if (!m.contains("id")) {
        throw ScenarioValidationError(where + " is missing \"id\"");
      }
      MasterSpec spec;
      spec.id = m.at("id").get<std::string>();
      if (m.contains("zone")) {
        spec.zone = m.at("zone").get<std::string>();
      }
      scenario.masters.push_back(spec);
    }
    if (scenario.masters.size() != 3) {
      throw ScenarioValidationError("masters must list exactly 3 entries");
    }
  }

  std::string policy = doc.at("policy").get<std::string>();
  if (policy == "dynamic") {
    scenario.policy = Policy::Dynamic;
  } else if (policy == "static") {
    scenario.policy = Policy::Static;
  } else {
    throw ScenarioValidationError("policy must be dynamic or static, got " +
                                  policy);
  }

  if (doc.contains("staticMap")) {
    if (!doc.at("staticMap").is_object()) {
      throw ScenarioValidationError("staticMap must be an object");
    }
    std::map<std::string, std::vector<AgentId>> pools;
    for (const auto& [pool, members] : doc.at("staticMap").items()) {
      if (!members.is_array()) {
        throw ScenarioValidationError("staticMap." + pool +
                                      " must be an array of agent ids");
      }
      std::vector<AgentId> ids;
      for (const auto& id : members) {
        if (!id.is_string()) {
          throw ScenarioValidationError("staticMap." + pool +
                                        " entries must be strings");
        }
        ids.push_back(id.get<std::string>());
      }
      pools.emplace(pool, std::move(ids));
    }
    scenario.staticMap = std::move(pools);
  }

  if (doc.contains("queues")) {
    if (!doc.at("queues").is_array()) {
      throw ScenarioValidationError("queues must be an array");
    }
    for (size_t i = 0; i < doc.at("queues").size(); i++) {
      try {
        scenario.queues.push_back(parseQueue(doc.at("queues")[i], i));
      } catch (const ScenarioValidationError&) {
        throw;
      } catch (const ValidationError& e) {
        throw ScenarioValidationError(e.what());
      }
    }
  }
  if (doc.contains("apps")) {
    if (!doc.at("apps").is_array()) {
      throw ScenarioValidationError("apps must be an array");
    }
    for (const auto& app : doc.at("apps")) {
      try {
        scenario.apps.push_back(appFromJson(app));
      } catch (const ValidationError& e) {
        throw ScenarioValidationError(e.what());
      }
    }
  }
  if (doc.contains("workload")) {
    if (!doc.at("workload").is_array()) {
      throw ScenarioValidationError("workload must be an array");
    }
    for (size_t i = 0; i < doc.at("workload").size(); i++) {
      scenario.workload.push_back(parseWorkload(doc.at("workload")[i], i));
    }
  }
  if (doc.contains("failures")) {
    if (!doc.at("failures").is_array()) {
      throw ScenarioValidationError("failures must be an array");
    }
    for (size_t i = 0; i < doc.at("failures").size(); i++) {
      scenario.failures.push_back(parseFailure(doc.at("failures")[i], i));
    }
  }
  if (doc.contains("offerTtl")) {
    scenario.offerTtl = secondsToMs(doc.at("offerTtl"), "offerTtl");
    if (scenario.offerTtl <= 0) {
      throw ScenarioValidationError("offerTtl must be > 0");
    }
  }
  if (doc.contains("proxyPeriod")) {
    scenario.proxyPeriod = secondsToMs(doc.at("proxyPeriod"), "proxyPeriod");
    if (scenario.proxyPeriod <= 0) {
      throw ScenarioValidationError("proxyPeriod must be > 0");
    }
  }

  try {
    validateScenario(scenario);
  } catch (const ScenarioValidationError&) {
    throw;
  } catch (const MissingStaticMapError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ScenarioValidationError(e.what());
  }
  return scenario;
}

Scenario loadScenarioFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScenarioValidationError("cannot read scenario file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parseScenario(buffer.str());
}

} // namespace offersched
