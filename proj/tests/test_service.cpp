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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "offersched/errors.hpp"
#include "offersched/service.hpp"
#include "offersched/verify.hpp"

#include "harness.hpp"

using namespace offersched;
using namespace offersched::tests;

namespace {

// Full scheduler stack around one service framework; rounds launch staged
// tasks immediately so instances come up Running.
struct ServiceWorld {
  explicit ServiceWorld(std::vector<AgentSpec> agents)
    : cluster(std::move(agents), &log),
      masters(MasterGroup::makeDefault()),
      allocator(cluster, masters, log, seconds(30)),
      services("services", cluster, log, ops) {
    ops.allocator = &allocator;
    allocator.registerFramework(&services);
  }

  void round(SimTime now) {
    allocator.allocationRound(now);
    std::vector<TaskId> staged;
    for (const auto& [id, task] : cluster.tasks()) {
      if (task.state == TaskState::Staging) {
        staged.push_back(id);
      }
    }
    for (const TaskId& id : staged) {
      allocator.applyTransition(id, TaskEvent::Launched, now);
    }
    verifyWorld(cluster, allocator, &services, nullptr, log.size());
  }

  EventLog log;
  Cluster cluster;
  MasterGroup masters;
  Allocator allocator;
  AllocatorTaskOps ops;
  ServiceFramework services;
};

AppDefinition esApp(int instances = 3) {
  AppDefinition def;
  def.id = "/es";
  def.instances = instances;
  def.request = ResourceVector::of(1, 2048);
  def.ports = {9200};
  def.constraints = {{"hostname", ConstraintOp::Unique, ""}};
  return def;
}

std::set<AgentId> hostsOf(const ServiceFramework& services,
                          const std::string& appId) {
  std::set<AgentId> hosts;
  for (const ServiceInstance& inst : services.instances(appId)) {
    hosts.insert(inst.agentId);
  }
  return hosts;
}

// Independent oracle for the pattern language: each branch becomes an
// anchored regex with * widened to .*, everything else escaped.
bool regexLikeOracle(const std::string& pattern, const std::string& value) {
  std::string rx;
  for (char c : pattern) {
    if (c == '*') {
      rx += ".*";
    } else if (c == '|') {
      rx += '|';
    } else if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
      rx += c;
    } else {
      rx += '\\';
      rx += c;
    }
  }
  return std::regex_match(value, std::regex("(?:" + rx + ")"));
}

} // namespace

TEST_CASE("app definitions parse strictly with documented defaults") {
  AppDefinition def = parseAppDefinition(R"({"id": "/web"})");
  CHECK(def.id == "/web");
  CHECK(def.instances == 1);
  CHECK(def.request == ResourceVector::of(1, 128));
  CHECK(def.ports.empty());
  CHECK(def.constraints.empty());
  CHECK_FALSE(def.healthCheck.has_value());

  def = parseAppDefinition(R"({
    "id": "/es",
    "instances": 3,
    "cpus": 1,
    "mem": 4096,
    "ports": [9200],
    "volumes": [["/var/es", "/data"]],
    "constraints": [["hostname", "UNIQUE"], ["datanode", "CLUSTER", "es1"]],
    "healthCheck": {"interval": 10, "threshold": 3}
  })");
  CHECK(def.instances == 3);
  CHECK(def.volumes == std::vector<VolumeSpec>{{"/var/es", "/data"}});
  REQUIRE(def.constraints.size() == 2);
  CHECK(def.constraints[0] == Constraint{"hostname", ConstraintOp::Unique, ""});
  CHECK(def.constraints[1] ==
        Constraint{"datanode", ConstraintOp::Cluster, "es1"});
  REQUIRE(def.healthCheck.has_value());
  CHECK(def.healthCheck->interval == seconds(10));
  CHECK(def.healthCheck->threshold == 3);
}

TEST_CASE("app definition schema violations are rejected") {
  CHECK_THROWS_AS(parseAppDefinition("{nope"), ParseError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/a", "color": "red"})"),
                  ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "noSlash"})"),
                  ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/"})"), ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/a", "instances": -1})"),
                  ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/a", "cpus": 0})"),
                  ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/a", "ports": [0]})"),
                  ValidationError);
  CHECK_THROWS_AS(parseAppDefinition(R"({"id": "/a", "ports": [80, 80]})"),
                  ValidationError);
  CHECK_THROWS_AS(
      parseAppDefinition(R"({"id": "/a", "constraints": [["f", "UNIQUE", "v"]]})"),
      ValidationError);
  CHECK_THROWS_AS(
      parseAppDefinition(R"({"id": "/a", "constraints": [["f", "LIKE"]]})"),
      ValidationError);
  CHECK_THROWS_AS(
      parseAppDefinition(R"({"id": "/a", "constraints": [["f", "NEAR", "v"]]})"),
      ValidationError);
  CHECK_THROWS_AS(
      parseAppDefinition(R"({"id": "/a", "healthCheck": {"interval": 0}})"),
      ValidationError);
}

TEST_CASE("likeMatch agrees with a regex oracle over small inputs") {
  CHECK(likeMatch("a|b", "a"));
  CHECK(likeMatch("a|b", "b"));
  CHECK_FALSE(likeMatch("a|b", "ab"));
  CHECK(likeMatch("slc6*", "slc6-release"));
  CHECK(likeMatch("slc6*", "slc6"));
  CHECK_FALSE(likeMatch("slc6*", "slc5"));
  CHECK(likeMatch("*", ""));
  CHECK(likeMatch("a*b", "acb"));
  CHECK(likeMatch("a*b", "ab"));
  CHECK_FALSE(likeMatch("a*b", "ba"));
  CHECK(likeMatch("", ""));
  CHECK_FALSE(likeMatch("", "a"));

  // Exhaustive cross-check: all patterns up to length 3 over {a, b, *, |}
  // against all values up to length 3 over {a, b}.
  const std::string patternAlphabet = "ab*|";
  const std::string valueAlphabet = "ab";
  std::vector<std::string> patterns{""};
  for (int len = 1; len <= 3; len++) {
    size_t count = 1;
    for (int i = 0; i < len; i++) {
      count *= patternAlphabet.size();
    }
    for (size_t n = 0; n < count; n++) {
      size_t rest = n;
      std::string p;
      for (int i = 0; i < len; i++) {
        p += patternAlphabet[rest % patternAlphabet.size()];
        rest /= patternAlphabet.size();
      }
      patterns.push_back(p);
    }
  }
  std::vector<std::string> values{""};
  for (const char a : valueAlphabet) {
    values.push_back(std::string(1, a));
    for (const char b : valueAlphabet) {
      values.push_back(std::string{a, b});
      for (const char c : valueAlphabet) {
        values.push_back(std::string{a, b, c});
      }
    }
  }
  for (const std::string& pattern : patterns) {
    for (const std::string& value : values) {
      CAPTURE(pattern);
      CAPTURE(value);
      CHECK(likeMatch(pattern, value) == regexLikeOracle(pattern, value));
    }
  }
}

TEST_CASE("constraint evaluation over hostname and attributes") {
  AppDefinition unique = esApp();
  AgentSpec a1 = makeAgent("a1", 4, 8192);
  AgentSpec a2 = makeAgent("a2", 4, 8192);

  CHECK(evaluateConstraints(unique, a1, {}));
  CHECK_FALSE(evaluateConstraints(unique, a1, {a1}));
  CHECK(evaluateConstraints(unique, a2, {a1}));

  AppDefinition clustered;
  clustered.id = "/c";
  clustered.request = ResourceVector::of(1, 128);
  clustered.constraints = {{"datanode", ConstraintOp::Cluster, "es1"}};
  AgentSpec tagged = makeAgent("t1", 4, 8192, {{"datanode", "es1"}});
  AgentSpec wrong = makeAgent("t2", 4, 8192, {{"datanode", "es2"}});
  CHECK(evaluateConstraints(clustered, tagged, {}));
  CHECK_FALSE(evaluateConstraints(clustered, wrong, {}));
  // CLUSTER and LIKE over a missing attribute are configuration errors.
  CHECK_THROWS_AS(evaluateConstraints(clustered, a1, {}), UnknownFieldError);

  AppDefinition liking;
  liking.id = "/l";
  liking.request = ResourceVector::of(1, 128);
  liking.constraints = {{"rack", ConstraintOp::Like, "a|b"}};
  CHECK(evaluateConstraints(liking, makeAgent("x", 1, 128, {{"rack", "a"}}),
                            {}));
  CHECK_FALSE(evaluateConstraints(liking, makeAgent("x", 1, 128,
                                                    {{"rack", "c"}}),
                                  {}));
  CHECK_THROWS_AS(evaluateConstraints(liking, a1, {}), UnknownFieldError);

  // UNIQUE over a missing attribute compares empty strings: the second
  // untagged agent collides with the first.
  AppDefinition uniqueAttr;
  uniqueAttr.id = "/u";
  uniqueAttr.request = ResourceVector::of(1, 128);
  uniqueAttr.constraints = {{"rack", ConstraintOp::Unique, ""}};
  CHECK(evaluateConstraints(uniqueAttr, a1, {}));
  CHECK_FALSE(evaluateConstraints(uniqueAttr, a2, {a1}));
}

TEST_CASE("unique app reaches full count on distinct hosts") {
  ServiceWorld world({makeAgent("a1", 4, 8192), makeAgent("a2", 4, 8192),
                      makeAgent("a3", 4, 8192), makeAgent("a4", 4, 8192)});
  world.services.deploy(esApp(), 0);
  world.round(0);

  CHECK(world.services.runningCount("/es") == 3);
  CHECK(hostsOf(world.services, "/es").size() == 3);
  // UNIQUE hostname caps packing at one instance per offer.
  for (const auto& [id, state] : world.cluster.agents()) {
    CHECK(state.tasks.size() <= 1);
  }
  CHECK(world.services.wantsOffers() == false);
}

TEST_CASE("unconstrained instances pack into one offer with distinct ports") {
  ServiceWorld world({makeAgent("big", 8, 16384)});
  AppDefinition def;
  def.id = "/web";
  def.instances = 3;
  def.request = ResourceVector::of(1, 1024);
  def.ports = {80};
  world.services.deploy(def, 0);
  world.round(0);

  CHECK(world.services.runningCount("/web") == 3);
  std::set<int> hostPorts;
  for (const ServiceInstance& inst : world.services.instances("/web")) {
    REQUIRE(inst.ports.size() == 1);
    CHECK(inst.ports[0].containerPort == 80);
    hostPorts.insert(inst.ports[0].hostPort);
  }
  CHECK(hostPorts == std::set<int>{31000, 31001, 31002});
}

TEST_CASE("killed instance is replaced without violating constraints") {
  ServiceWorld world({makeAgent("a1", 4, 8192), makeAgent("a2", 4, 8192),
                      makeAgent("a3", 4, 8192), makeAgent("a4", 4, 8192)});
  world.services.deploy(esApp(), 0);
  world.round(0);

  std::optional<TaskId> victim = world.services.pickVictim("/es");
  REQUIRE(victim.has_value());
  world.allocator.applyTransition(*victim, TaskEvent::Kill, 1000);
  CHECK(world.services.liveCount("/es") == 2);
  CHECK(world.services.wantsOffers());

  world.round(5000);
  CHECK(world.services.runningCount("/es") == 3);
  CHECK(hostsOf(world.services, "/es").size() == 3);
}

TEST_CASE("deploy deploy rollback keeps a three entry history") {
  ServiceWorld world({makeAgent("a1", 4, 8192), makeAgent("a2", 4, 8192),
                      makeAgent("a3", 4, 8192)});
  AppDefinition v1 = esApp();
  CHECK(world.services.deploy(v1, 0) == 1);
  world.round(0);

  AppDefinition v2 = v1;
  v2.request = ResourceVector::of(1, 4096);
  CHECK(world.services.deploy(v2, 1000) == 2);
  // Replacement is stop then start: old instances die with the deploy.
  CHECK(world.services.liveCount("/es") == 0);
  world.round(5000);
  CHECK(world.services.runningCount("/es") == 3);
  CHECK(world.services.definition("/es") == v2);

  CHECK(world.services.rollback("/es", 1, 10000) == 3);
  CHECK(world.services.history("/es").size() == 3);
  CHECK(world.services.definition("/es") == v1);
  CHECK(world.services.version("/es") == 3);
  world.round(15000);
  CHECK(world.services.runningCount("/es") == 3);

  CHECK_THROWS_AS(world.services.rollback("/es", 9, 0), UnknownVersionError);
  CHECK_THROWS_AS(world.services.rollback("/none", 1, 0), UnknownAppError);
}

TEST_CASE("scale down kills newest instances first") {
  ServiceWorld world({makeAgent("a1", 4, 8192), makeAgent("a2", 4, 8192),
                      makeAgent("a3", 4, 8192)});
  world.services.deploy(esApp(), 0);
  world.round(0);

  std::vector<uint64_t> seqs;
  for (const ServiceInstance& inst : world.services.instances("/es")) {
    seqs.push_back(inst.seq);
  }
  REQUIRE(seqs.size() == 3);

  world.services.scale("/es", 1, 1000);
  REQUIRE(world.services.instances("/es").size() == 1);
  CHECK(world.services.instances("/es")[0].seq ==
        *std::min_element(seqs.begin(), seqs.end()));

  world.services.scale("/es", 3, 2000);
  world.round(5000);
  CHECK(world.services.runningCount("/es") == 3);
  CHECK(world.services.version("/es") == 3); // two scales after the deploy
}

TEST_CASE("health failures kill at the threshold and probes recover") {
  ServiceWorld world({makeAgent("a1", 4, 8192)});
  AppDefinition def;
  def.id = "/svc";
  def.instances = 1;
  def.request = ResourceVector::of(1, 1024);
  def.healthCheck = HealthCheckSpec{seconds(10), 3};
  world.services.deploy(def, 0);
  world.round(0);

  TaskId task = world.services.instances("/svc")[0].taskId;
  world.services.reportHealth(task, false, 1000);
  world.services.reportHealth(task, false, 2000);
  CHECK(world.services.runningCount("/svc") == 1);

  // A healthy report resets the strike counter.
  world.services.reportHealth(task, true, 3000);
  world.services.reportHealth(task, false, 4000);
  world.services.reportHealth(task, false, 5000);
  CHECK(world.services.runningCount("/svc") == 1);

  world.services.reportHealth(task, false, 6000);
  CHECK(world.services.liveCount("/svc") == 0);
  CHECK(countRecords(world.log, "health_killed") == 1);
  CHECK(world.cluster.task(task).state == TaskState::Killed);

  world.round(10000);
  CHECK(world.services.runningCount("/svc") == 1);
  CHECK(world.services.instances("/svc")[0].taskId != task);
}

TEST_CASE("endpoints list running instances sorted") {
  ServiceWorld world({makeAgent("a1", 4, 8192), makeAgent("a2", 4, 8192)});
  AppDefinition web;
  web.id = "/web";
  web.instances = 2;
  web.request = ResourceVector::of(1, 1024);
  web.ports = {80};
  web.constraints = {{"hostname", ConstraintOp::Unique, ""}};
  AppDefinition api = web;
  api.id = "/api";
  api.instances = 1;
  world.services.deploy(web, 0);
  world.services.deploy(api, 0);
  world.round(0);

  std::vector<Endpoint> endpoints = world.services.endpoints();
  REQUIRE(endpoints.size() == 3);
  CHECK(std::is_sorted(endpoints.begin(), endpoints.end()));
  CHECK(endpoints[0].appId == "/api");
  CHECK(endpoints[1].appId == "/web");

  // Staging and dead instances are not endpoints.
  TaskId task = world.services.instances("/api")[0].taskId;
  world.allocator.applyTransition(task, TaskEvent::Kill, 1000);
  endpoints = world.services.endpoints();
  CHECK(endpoints.size() == 2);
}

TEST_CASE("task ids stay unique when app ids sanitize to the same prefix") {
  ServiceWorld world({makeAgent("big", 16, 32768)});
  AppDefinition one;
  one.id = "/es";
  one.instances = 1;
  one.request = ResourceVector::of(1, 1024);
  AppDefinition two = one;
  two.id = "//es";
  world.services.deploy(one, 0);
  world.services.deploy(two, 0);
  world.round(0);

  CHECK(world.services.runningCount("/es") == 1);
  CHECK(world.services.runningCount("//es") == 1);
  TaskId t1 = world.services.instances("/es")[0].taskId;
  TaskId t2 = world.services.instances("//es")[0].taskId;
  CHECK(t1 != t2);
  CHECK(t1.rfind("es.", 0) == 0);
}

TEST_CASE("offers that fit nothing are declined") {
  ServiceWorld world({makeAgent("tiny", 0.5, 256)});
  AppDefinition def;
  def.id = "/fat";
  def.instances = 1;
  def.request = ResourceVector::of(4, 8192);
  world.services.deploy(def, 0);
  world.round(0);

  CHECK(world.services.liveCount("/fat") == 0);
  CHECK(countRecords(world.log, "offer_declined") == 1);
}

TEST_CASE("constraints over a field no agent carries skip the app") {
  ServiceWorld world({makeAgent("a1", 4, 8192)});
  AppDefinition def;
  def.id = "/zoned";
  def.instances = 1;
  def.request = ResourceVector::of(1, 1024);
  def.constraints = {{"zone", ConstraintOp::Like, "a|b"}};
  world.services.deploy(def, 0);
  world.round(0);

  // The agent lacks the attribute entirely: the app cannot place, but the
  // round completes and the offer is declined rather than erroring out.
  CHECK(world.services.liveCount("/zoned") == 0);
  CHECK(countRecords(world.log, "offer_declined") == 1);
}
