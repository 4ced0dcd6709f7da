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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "offersched/errors.hpp"
#include "offersched/events.hpp"
#include "offersched/metrics.hpp"
#include "offersched/scenario.hpp"
#include "offersched/sim.hpp"

namespace {

using namespace offersched;

// Exit codes are the machine contract: 0 ok, 2 validation, 3 invariant
// violation, 4 replay mismatch (and 1 for a failed policy comparison).
constexpr int kExitOk = 0;
constexpr int kExitDominanceFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitMismatch = 4;

void writeFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw ValidationError("short write to " + path.string());
  }
}

std::optional<std::string> readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string formatUtil(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

int cmdRun(const std::string& scenarioPath,
           const std::optional<uint64_t>& seedOverride, bool verify,
           const std::string& outDir, const std::string& format) {
  Scenario scenario = loadScenarioFile(scenarioPath);
  if (seedOverride) {
    scenario.seed = *seedOverride;
  }
  RunResult result = runScenario(scenario, verify);

  std::filesystem::path out(outDir);
  std::filesystem::create_directories(out);
  writeFile(out / "events.ndjson", result.log.toNdjson());
  if (format == "ndjson") {
    writeFile(out / "metrics.ndjson", metricsToNdjson(result.report));
  } else {
    writeFile(out / "metrics.csv", metricsToCsv(result.report));
  }
  writeFile(out / "summary.txt", summaryText(result.report));
  std::cout << summaryText(result.report);
  return kExitOk;
}

struct PolicyRow {
  MetricsReport report;
};

int cmdCompare(const std::string& scenarioPath, std::vector<uint64_t> seeds,
               bool verify, const std::string& outDir) {
  Scenario base = loadScenarioFile(scenarioPath);
  if (!base.staticMap) {
    throw MissingStaticMapError("compare needs a scenario with a staticMap");
  }
  if (seeds.empty()) {
    seeds = {1, 2, 3, 4, 5};
  }

  // Runs share no mutable state, so the policy pairs fan out in parallel.
  std::vector<std::future<MetricsReport>> futures;
  for (uint64_t seed : seeds) {
    for (Policy policy : {Policy::Dynamic, Policy::Static}) {
      futures.push_back(std::async(std::launch::async,
          [base, seed, policy, verify]() {
            Scenario scenario = base;
            scenario.seed = seed;
            scenario.policy = policy;
            return runScenario(scenario, verify).report;
          }));
    }
  }

  std::ostringstream csv;
  csv << "seed,policy,cpu_util,mem_util,p50_pr,p90_pr,builds_done,verdict\n";
  bool allDominant = true;
  for (size_t i = 0; i < seeds.size(); i++) {
    MetricsReport dynamicReport = futures[2 * i].get();
    MetricsReport staticReport = futures[2 * i + 1].get();
    const LatencyStats& dynamicPr = dynamicReport.perKind.at("pr-test");
    const LatencyStats& staticPr = staticReport.perKind.at("pr-test");

    bool utilOk = dynamicReport.cpuUtil >= staticReport.cpuUtil;
    bool latencyOk = dynamicPr.p90Ms <= staticPr.p90Ms;
    std::string verdict;
    if (utilOk && latencyOk) {
      bool equal = dynamicReport.cpuUtil == staticReport.cpuUtil &&
                   dynamicPr.p90Ms == staticPr.p90Ms;
      verdict = equal ? "tie" : "dynamic";
    } else {
      verdict = "static";
      allDominant = false;
    }

    const MetricsReport* reports[2] = {&dynamicReport, &staticReport};
    const char* names[2] = {"dynamic", "static"};
    for (int p = 0; p < 2; p++) {
      const MetricsReport& r = *reports[p];
      const LatencyStats& pr = r.perKind.at("pr-test");
      csv << seeds[i] << "," << names[p] << "," << formatUtil(r.cpuUtil)
          << "," << formatUtil(r.memUtil) << "," << pr.p50Ms << ","
          << pr.p90Ms << "," << r.buildsDone << "," << verdict << "\n";
    }
    std::cout << "seed " << seeds[i] << ": " << verdict << "\n";
  }

  std::filesystem::path out(outDir);
  std::filesystem::create_directories(out);
  writeFile(out / "compare.csv", csv.str());
  std::cout << (allDominant ? "dynamic dominates on every seed\n"
                            : "dynamic fails to dominate\n");
  return allDominant ? kExitOk : kExitDominanceFailed;
}

int cmdReplay(const std::string& eventsPath) {
  std::ifstream in(eventsPath, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot read " + eventsPath);
  }
  EventLog log = EventLog::fromNdjson(in);
  MetricsReport report = computeMetrics(log);
  std::cout << summaryText(report);

  std::filesystem::path sibling =
      std::filesystem::path(eventsPath).parent_path();
  if (auto stored = readFile(sibling / "metrics.csv")) {
    if (*stored != metricsToCsv(report)) {
      std::cerr << "error: recomputed metrics differ from stored metrics.csv\n";
      return kExitMismatch;
    }
  } else if (auto storedNd = readFile(sibling / "metrics.ndjson")) {
    if (*storedNd != metricsToNdjson(report)) {
      std::cerr << "error: recomputed metrics differ from stored "
                   "metrics.ndjson\n";
      return kExitMismatch;
    }
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic offer-based cluster scheduling simulator"};
  app.require_subcommand(1);

  std::string scenarioPath;
  uint64_t seedValue = 0;
  bool verify = false;
  std::string outDir = "out";
  std::string format = "csv";
  std::vector<uint64_t> seeds;
  std::string eventsPath;

  CLI::App* runCmd = app.add_subcommand("run", "Run one scenario");
  runCmd->add_option("--scenario", scenarioPath, "Scenario JSON path")
      ->required();
  CLI::Option* seedOpt =
      runCmd->add_option("--seed", seedValue, "Override the scenario seed");
  runCmd->add_flag("--verify", verify, "Check invariants after every event");
  runCmd->add_option("--out", outDir, "Output directory (default: out)");
  runCmd->add_option("--format", format, "Metrics format")
      ->check(CLI::IsMember({"csv", "ndjson"}));

  CLI::App* compareCmd =
      app.add_subcommand("compare", "Run dynamic vs static policy per seed");
  compareCmd->add_option("--scenario", scenarioPath, "Scenario JSON path")
      ->required();
  compareCmd->add_option("--seeds", seeds, "Seeds (default: 1,2,3,4,5)")
      ->delimiter(',');
  compareCmd->add_flag("--verify", verify,
                       "Check invariants after every event");
  compareCmd->add_option("--out", outDir, "Output directory (default: out)");

  CLI::App* replayCmd =
      app.add_subcommand("replay", "Recompute metrics from an event log");
  replayCmd->add_option("--events", eventsPath, "events.ndjson path")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (runCmd->parsed()) {
      std::optional<uint64_t> seedOverride;
      if (seedOpt->count() > 0) {
        seedOverride = seedValue;
      }
      return cmdRun(scenarioPath, seedOverride, verify, outDir, format);
    }
    if (compareCmd->parsed()) {
      return cmdCompare(scenarioPath, seeds, verify, outDir);
    }
    return cmdReplay(eventsPath);
  } catch (const offersched::InvariantViolationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const offersched::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
