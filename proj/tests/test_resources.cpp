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

#include <sstream>

#include "offersched/errors.hpp"
#include "offersched/events.hpp"
#include "offersched/resources.hpp"

using namespace offersched;

TEST_CASE("fixed point construction is exact") {
  ResourceVector v = ResourceVector::of(4, 7782.4);
  CHECK(v.millicores() == 4000);
  CHECK(v.memTenths() == 77824);
  CHECK(v.diskTenths() == 0);

  // 71 x 7782.4 MiB sums without drift: the tenth-MiB grid keeps it integral.
  ResourceVector fleet;
  for (int i = 0; i < 71; i++) {
    fleet += v;
  }
  CHECK(fleet.millicores() == 284000);
  CHECK(fleet.memTenths() == 71 * 77824);
  CHECK(fleet.memMiB() == doctest::Approx(552550.4));

  CHECK(ResourceVector::of(2.5, 0.1).millicores() == 2500);
  CHECK(ResourceVector::of(0.001, 1024).millicores() == 1);
}

TEST_CASE("off grid and negative quantities are rejected") {
  CHECK_THROWS_AS(ResourceVector::of(-1, 0), ValidationError);
  CHECK_THROWS_AS(ResourceVector::of(0, -0.5), ValidationError);
  CHECK_THROWS_AS(ResourceVector::of(0.0001, 0), ValidationError);   // < 1 mc
  CHECK_THROWS_AS(ResourceVector::of(0, 0.01), ValidationError);     // < 0.1 MiB
  CHECK_THROWS_AS(ResourceVector::fromUnits(-1, 0), ValidationError);
}

TEST_CASE("arithmetic and underflow") {
  ResourceVector a = ResourceVector::of(4, 8192);
  ResourceVector b = ResourceVector::of(1, 1024);
  CHECK(a + b == ResourceVector::of(5, 9216));
  CHECK(a - b == ResourceVector::of(3, 7168));
  CHECK(a.contains(b));
  CHECK_FALSE(b.contains(a));
  CHECK(ResourceVector().empty());
  CHECK_FALSE(a.empty());

  // Any single negative component underflows, even when others have slack.
  ResourceVector lopsided = ResourceVector::of(10, 10);
  CHECK_THROWS_AS(b - lopsided, UnderflowError);
  CHECK_THROWS_AS(ResourceVector() - b, UnderflowError);
}

TEST_CASE("string and json round trips are byte exact") {
  ResourceVector v = ResourceVector::of(4, 7782.4);
  CHECK(v.toString() == "cpus=4 mem=7782.4 disk=0");

  nlohmann::json j = v.toJson();
  CHECK(j.at("cpus").get<std::string>() == "4");
  CHECK(j.at("mem").get<std::string>() == "7782.4");
  CHECK(j.at("disk").get<std::string>() == "0");
  CHECK(ResourceVector::fromJson(j) == v);

  ResourceVector w = ResourceVector::of(0.25, 0.1, 102.4);
  CHECK(ResourceVector::fromJson(w.toJson()) == w);
  CHECK(w.toJson().at("cpus").get<std::string>() == "0.25");

  CHECK_THROWS_AS(ResourceVector::fromJson(nlohmann::json{{"cpus", "1"}}),
                  ValidationError);
}

TEST_CASE("formatFixed trims and parseFixed inverts") {
  CHECK(formatFixed(2500, 1000) == "2.5");
  CHECK(formatFixed(40960, 10) == "4096");
  CHECK(formatFixed(1, 1000) == "0.001");
  CHECK(formatFixed(0, 10) == "0");
  CHECK(formatFixed(77824, 10) == "7782.4");

  CHECK(parseFixed("2.5", 1000) == 2500);
  CHECK(parseFixed("4096", 10) == 40960);
  CHECK(parseFixed("0.001", 1000) == 1);
  CHECK(parseFixed("7782.4", 10) == 77824);

  for (int64_t value : {0LL, 1LL, 999LL, 1000LL, 123456789LL}) {
    CHECK(parseFixed(formatFixed(value, 1000), 1000) == value);
    CHECK(parseFixed(formatFixed(value, 10), 10) == value);
  }

  CHECK_THROWS_AS(parseFixed("", 10), ValidationError);
  CHECK_THROWS_AS(parseFixed("abc", 10), ValidationError);
  CHECK_THROWS_AS(parseFixed("-1", 10), ValidationError);
  CHECK_THROWS_AS(parseFixed("1.23", 10), ValidationError);    // too fine
  CHECK_THROWS_AS(parseFixed("1.2345", 1000), ValidationError);
  CHECK_THROWS_AS(parseFixed(".5", 10), ValidationError);
}

TEST_CASE("attrsSatisfy is exact subset match") {
  AttributeSet agent{{"os", "slc6"}, {"rack", "a"}};
  CHECK(attrsSatisfy(agent, {}));
  CHECK(attrsSatisfy(agent, {{"os", "slc6"}}));
  CHECK(attrsSatisfy(agent, {{"os", "slc6"}, {"rack", "a"}}));
  CHECK_FALSE(attrsSatisfy(agent, {{"os", "slc5"}}));
  CHECK_FALSE(attrsSatisfy(agent, {{"zone", "a"}}));
}

TEST_CASE("task state machine accepts the legal table only") {
  CHECK(nextTaskState(TaskState::Staging, TaskEvent::Launched) ==
        TaskState::Running);
  CHECK(nextTaskState(TaskState::Staging, TaskEvent::Kill) ==
        TaskState::Killed);
  CHECK(nextTaskState(TaskState::Running, TaskEvent::Completed) ==
        TaskState::Finished);
  CHECK(nextTaskState(TaskState::Running, TaskEvent::Failed) ==
        TaskState::Failed);
  CHECK(nextTaskState(TaskState::Running, TaskEvent::Kill) ==
        TaskState::Killed);
  CHECK(nextTaskState(TaskState::Staging, TaskEvent::AgentLost) ==
        TaskState::Lost);
  CHECK(nextTaskState(TaskState::Running, TaskEvent::AgentLost) ==
        TaskState::Lost);

  CHECK_THROWS_AS(nextTaskState(TaskState::Staging, TaskEvent::Completed),
                  IllegalTransitionError);
  CHECK_THROWS_AS(nextTaskState(TaskState::Staging, TaskEvent::Failed),
                  IllegalTransitionError);
  for (TaskState terminal : {TaskState::Finished, TaskState::Failed,
                             TaskState::Killed, TaskState::Lost}) {
    CHECK(isTerminal(terminal));
    for (TaskEvent event : {TaskEvent::Launched, TaskEvent::Completed,
                            TaskEvent::Failed, TaskEvent::Kill,
                            TaskEvent::AgentLost}) {
      CHECK_THROWS_AS(nextTaskState(terminal, event), IllegalTransitionError);
    }
  }
  CHECK_FALSE(isTerminal(TaskState::Staging));
  CHECK_FALSE(isTerminal(TaskState::Running));
}

TEST_CASE("port pool hands out lowest free port and recycles") {
  PortPool pool;
  CHECK(pool.allocate() == 31000);
  CHECK(pool.allocate() == 31001);
  CHECK(pool.allocate() == 31002);
  pool.release(31001);
  CHECK(pool.allocate() == 31001);
  CHECK(pool.allocate() == 31003);
  pool.reset();
  CHECK(pool.allocate() == 31000);
}

TEST_CASE("agent free pool is total minus allocated minus offered") {
  AgentState state;
  state.spec.id = "a1";
  state.spec.total = ResourceVector::of(4, 8192);
  state.allocated = ResourceVector::of(1, 1024);
  state.offered = ResourceVector::of(2, 2048);
  CHECK(state.free() == ResourceVector::of(1, 5120));
}

TEST_CASE("event log appends and exports in order") {
  EventLog log;
  CHECK(log.append(0, "alpha", {{"k", "v"}}) == 0);
  CHECK(log.append(5, "beta", nlohmann::json::object()) == 1);
  CHECK(log.size() == 2);

  std::string text = log.toNdjson();
  EventLog back = EventLog::fromNdjsonText(text);
  REQUIRE(back.size() == 2);
  CHECK(back.records()[0].kind == "alpha");
  CHECK(back.records()[1].t == 5);
  CHECK(back.toNdjson() == text);
}

TEST_CASE("event log import rejects structural damage") {
  CHECK_THROWS_AS(EventLog::fromNdjsonText("not json\n"), MalformedLogError);
  CHECK_THROWS_AS(EventLog::fromNdjsonText("[1,2]\n"), MalformedLogError);
  // t must be non-decreasing and seq strictly increasing.
  CHECK_THROWS_AS(EventLog::fromNdjsonText(
      "{\"t\":5,\"seq\":0,\"kind\":\"a\",\"payload\":{}}\n"
      "{\"t\":4,\"seq\":1,\"kind\":\"b\",\"payload\":{}}\n"),
      MalformedLogError);
  CHECK_THROWS_AS(EventLog::fromNdjsonText(
      "{\"t\":5,\"seq\":0,\"kind\":\"a\",\"payload\":{}}\n"
      "{\"t\":5,\"seq\":0,\"kind\":\"b\",\"payload\":{}}\n"),
      MalformedLogError);
  CHECK_THROWS_AS(EventLog::fromNdjsonText(
      "{\"t\":5,\"seq\":3,\"kind\":\"a\",\"payload\":{}}\n"),
      MalformedLogError);
}
