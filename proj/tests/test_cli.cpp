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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

// Every invocation goes through the real binary; exit codes are the
// machine contract under test.
int runCli(const std::string& args) {
  std::string command =
      std::string(OFFERSCHED_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string scenarioPath(const std::string& name) {
  return std::string(OFFERSCHED_SCENARIO_DIR) + "/" + name;
}

fs::path freshDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "offersched-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    out.push_back(line);
  }
  return out;
}

} // namespace

TEST_CASE("run writes the three artifacts and replay verifies them") {
  fs::path dir = freshDir("run-roundtrip");
  int rc = runCli("run --scenario " + scenarioPath("tight.json") +
                  " --verify --out " + dir.string());
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "events.ndjson"));
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "summary.txt"));

  std::string metrics = readFile(dir / "metrics.csv");
  CHECK(lines(metrics)[0] == "metric,value");
  CHECK(readFile(dir / "summary.txt").find("cpu utilization: ") !=
        std::string::npos);

  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 0);

  // Same scenario, same seed: a second run reproduces both files exactly.
  fs::path again = freshDir("run-again");
  CHECK(runCli("run --scenario " + scenarioPath("tight.json") + " --out " +
               again.string()) == 0);
  CHECK(readFile(again / "events.ndjson") == readFile(dir / "events.ndjson"));
  CHECK(readFile(again / "metrics.csv") == metrics);
}

TEST_CASE("the ndjson format swaps the metrics artifact") {
  fs::path dir = freshDir("run-ndjson");
  int rc = runCli("run --scenario " + scenarioPath("tight.json") +
                  " --format ndjson --out " + dir.string());
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "metrics.ndjson"));
  CHECK_FALSE(fs::exists(dir / "metrics.csv"));
  CHECK(lines(readFile(dir / "metrics.ndjson"))[0].find("cpu_util") !=
        std::string::npos);

  // Replay falls back to the ndjson metrics for its byte comparison.
  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 0);
  writeFile(dir / "metrics.ndjson", "tampered\n");
  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 4);
}

TEST_CASE("invalid scenarios exit with the validation code") {
  fs::path dir = freshDir("run-invalid");
  CHECK(runCli("run --scenario /nonexistent.json --out " + dir.string()) == 2);

  fs::path malformed = dir / "malformed.json";
  writeFile(malformed, "{not json");
  CHECK(runCli("run --scenario " + malformed.string() + " --out " +
               dir.string()) == 2);

  fs::path unknown = dir / "unknown-key.json";
  writeFile(unknown, R"({
    "seed": 1, "duration": 10, "policy": "dynamic",
    "agents": [{"id": "a1", "cpus": 1, "mem": 1024}],
    "surprise": true
  })");
  CHECK(runCli("run --scenario " + unknown.string() + " --out " +
               dir.string()) == 2);
}

TEST_CASE("replay flags tampered or truncated artifacts") {
  fs::path dir = freshDir("replay-tamper");
  REQUIRE(runCli("run --scenario " + scenarioPath("tight.json") + " --out " +
                 dir.string()) == 0);

  // A touched metrics file no longer matches the recomputation.
  std::string metrics = readFile(dir / "metrics.csv");
  writeFile(dir / "metrics.csv", metrics + "extra_row,1\n");
  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 4);
  writeFile(dir / "metrics.csv", metrics);
  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 0);

  // Dropping the closing record leaves a structurally broken run.
  std::vector<std::string> events = lines(readFile(dir / "events.ndjson"));
  REQUIRE(events.back().find("sim_ended") != std::string::npos);
  std::string truncated;
  for (size_t i = 0; i + 1 < events.size(); i++) {
    truncated += events[i] + "\n";
  }
  writeFile(dir / "events.ndjson", truncated);
  CHECK(runCli("replay --events " + (dir / "events.ndjson").string()) == 2);

  CHECK(runCli("replay --events /nonexistent/events.ndjson") == 2);
}

TEST_CASE("compare pits the policies over the default seeds") {
  fs::path dir = freshDir("compare-tight");
  int rc = runCli("compare --scenario " + scenarioPath("tight.json") +
                  " --out " + dir.string());
  CHECK(rc == 0);

  std::vector<std::string> rows = lines(readFile(dir / "compare.csv"));
  REQUIRE(rows.size() == 11); // header + 5 seeds x 2 policies
  CHECK(rows[0] == "seed,policy,cpu_util,mem_util,p50_pr,p90_pr,builds_done,"
                   "verdict");
  for (size_t i = 1; i < rows.size(); i++) {
    const std::string& expected = (i % 2 == 1) ? ",dynamic," : ",static,";
    CHECK(rows[i].find(expected) != std::string::npos);
    CHECK(rows[i].substr(rows[i].rfind(',') + 1) == "dynamic");
  }

  // Fewer seeds shrink the table accordingly.
  fs::path narrow = freshDir("compare-narrow");
  CHECK(runCli("compare --scenario " + scenarioPath("tight.json") +
               " --seeds 7,8 --out " + narrow.string()) == 0);
  CHECK(lines(readFile(narrow / "compare.csv")).size() == 5);
}

TEST_CASE("compare refuses a scenario without a static map") {
  fs::path dir = freshDir("compare-nomap");
  CHECK(runCli("compare --scenario " + scenarioPath("failover.json") +
               " --out " + dir.string()) == 2);
}

TEST_CASE("the seed flag reroutes every random stream") {
  fs::path dir = freshDir("seed-override");
  fs::path scenario = dir / "poisson.json";
  writeFile(scenario, R"({
    "seed": 1,
    "duration": 3600,
    "agents": [{"id": "a1", "cpus": 4, "mem": 8192}],
    "policy": "dynamic",
    "queues": [{"label": "q", "cpus": 2, "mem": 4096, "maxBuilders": 2}],
    "workload": [{"kind": "pr-test", "label": "q", "duration": 300,
                  "arrivals": {"type": "poisson", "ratePerDay": 400}}]
  })");

  fs::path a = freshDir("seed-a");
  fs::path b = freshDir("seed-b");
  fs::path c = freshDir("seed-c");
  REQUIRE(runCli("run --scenario " + scenario.string() + " --seed 1 --out " +
                 a.string()) == 0);
  REQUIRE(runCli("run --scenario " + scenario.string() + " --seed 2 --out " +
                 b.string()) == 0);
  REQUIRE(runCli("run --scenario " + scenario.string() + " --seed 1 --out " +
                 c.string()) == 0);
  CHECK(readFile(a / "events.ndjson") != readFile(b / "events.ndjson"));
  CHECK(readFile(a / "events.ndjson") == readFile(c / "events.ndjson"));
}

TEST_CASE("bad invocations never exit zero") {
  CHECK(runCli("run") != 0);                  // missing required --scenario
  CHECK(runCli("frobnicate") != 0);           // unknown subcommand
  CHECK(runCli("run --scenario x --nope") != 0);
  CHECK(runCli("run --scenario " + scenarioPath("tight.json") +
               " --format xml") != 0);
  CHECK(runCli("") != 0);                     // a subcommand is required
}
