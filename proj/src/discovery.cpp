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

#include "offersched/discovery.hpp"

#include <algorithm>

#include "offersched/errors.hpp"

namespace offersched {

RegistrySnapshot RegistrySnapshot::capture(const ServiceFramework& services,
                                           SimTime now) {
  return fromEntries(now, services.endpoints());
}

RegistrySnapshot RegistrySnapshot::fromEntries(SimTime takenAt,
                                               std::vector<Endpoint> entries) {
  std::sort(entries.begin(), entries.end());
  for (size_t i = 1; i < entries.size(); i++) {
    if (entries[i] == entries[i - 1]) {
      throw ValidationError("duplicate registry entry " + entries[i].appId +
                            " " + entries[i].hostname + ":" +
                            std::to_string(entries[i].port));
    }
  }
  RegistrySnapshot snapshot;
  snapshot.takenAt = takenAt;
  snapshot.entries = std::move(entries);
  return snapshot;
}

std::string sanitizeBackendName(const std::string& appId) {
  std::string name = appId;
  std::replace(name.begin(), name.end(), '/', '_');
  size_t i = 0;
  while (i < name.size() && name[i] == '_') {
    i++;
  }
  return name.substr(i);
}

ProxyConfig renderProxyConfig(const RegistrySnapshot& snapshot) {
  std::string text;
  text += "# rendered at " + std::to_string(snapshot.takenAt) + "\n";
  text += "# ssl termination is handled upstream and not modeled here\n";
  text += "frontend http-in\n";

  std::vector<std::string> apps;
  for (const Endpoint& e : snapshot.entries) {
    if (apps.empty() || apps.back() != e.appId) {
      apps.push_back(e.appId);
    }
  }
  for (const std::string& appId : apps) {
    text += "use_backend " + sanitizeBackendName(appId) + " if path_beg " +
            appId + "\n";
  }
  for (const std::string& appId : apps) {
    text += "backend " + sanitizeBackendName(appId) + "\n";
    for (const Endpoint& e : snapshot.entries) {
      if (e.appId != appId) {
        continue;
      }
      text += "  server " + e.hostname + " " + e.hostname + ":" +
              std::to_string(e.port) + "\n";
    }
  }

  ProxyConfig config;
  config.renderedAt = snapshot.takenAt;
  config.text = std::move(text);
  return config;
}

ProxyCron::ProxyCron(SimTime period) : period_(period) {
  if (period_ <= 0) {
    throw ValidationError("proxy period must be > 0");
  }
}

std::optional<ProxyConfig> ProxyCron::tick(const ServiceFramework& services,
                                           EventLog& log, SimTime now) {
  if (now - lastRun_ < period_) {
    return std::nullopt;
  }
  RegistrySnapshot snapshot = RegistrySnapshot::capture(services, now);
  ProxyConfig config = renderProxyConfig(snapshot);
  log.append(now, "proxy_rendered",
      {{"taken_at", snapshot.takenAt},
       {"entries", snapshot.entries.size()},
       {"text", config.text}});
  lastRun_ = now;
  return config;
}

} // namespace offersched
