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

#ifndef OFFERSCHED_DISCOVERY_HPP
#define OFFERSCHED_DISCOVERY_HPP

#include <optional>
#include <string>
#include <vector>

#include "offersched/events.hpp"
#include "offersched/resources.hpp"
#include "offersched/service.hpp"

namespace offersched {

// Canonical view of all live endpoints at one instant: entries sorted by
// (app, hostname, port), duplicates rejected.
struct RegistrySnapshot {
  SimTime takenAt = 0;
  std::vector<Endpoint> entries;

  static RegistrySnapshot capture(const ServiceFramework& services,
                                  SimTime now);
  static RegistrySnapshot fromEntries(SimTime takenAt,
                                      std::vector<Endpoint> entries);

  bool sameEntries(const RegistrySnapshot& other) const {
    return entries == other.entries;
  }
};

struct ProxyConfig {
  SimTime renderedAt = 0;
  std::string text;
};

std::string sanitizeBackendName(const std::string& appId);

// Deterministic HAProxy-style document; equal snapshots yield byte-identical
// text apart from the timestamp header, and identical text when timestamps
// match.
ProxyConfig renderProxyConfig(const RegistrySnapshot& snapshot);

// Cron-cadence publisher; fires when a full period has elapsed since the
// last run (boundary inclusive, lastRun starts at 0).
class ProxyCron {
 public:
  explicit ProxyCron(SimTime period);

  std::optional<ProxyConfig> tick(const ServiceFramework& services,
                                  EventLog& log, SimTime now);

  SimTime period() const { return period_; }
  SimTime lastRun() const { return lastRun_; }

 private:
  SimTime period_;
  SimTime lastRun_ = 0;
};

} // namespace offersched

#endif // OFFERSCHED_DISCOVERY_HPP
