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

#include "offersched/resources.hpp"

#include <cmath>
#include <cstdlib>

namespace offersched {

namespace {

int64_t scaleExact(double value, int64_t scale, const char* what) {
  if (value < 0 || !std::isfinite(value)) {
    throw ValidationError(std::string(what) + " must be finite and >= 0");
  }
  double scaled = value * static_cast<double>(scale);
  int64_t rounded = std::llround(scaled);
  if (std::abs(scaled - static_cast<double>(rounded)) > 1e-6) {
    throw ValidationError(
        std::string(what) + " not representable at 1/" +
        std::to_string(scale) + " granularity");
  }
  return rounded;
}

} // namespace

ResourceVector ResourceVector::fromUnits(
    int64_t millicores, int64_t memTenths, int64_t diskTenths) {
  if (millicores < 0 || memTenths < 0 || diskTenths < 0) {
    throw ValidationError("resource components must be >= 0");
  }
  return ResourceVector(millicores, memTenths, diskTenths);
}

ResourceVector ResourceVector::of(double cpus, double memMiB, double diskMiB) {
  return ResourceVector(
      scaleExact(cpus, kCpuScale, "cpus"),
      scaleExact(memMiB, kMemScale, "mem"),
      scaleExact(diskMiB, kMemScale, "disk"));
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& other) {
  cpus_ += other.cpus_;
  mem_ += other.mem_;
  disk_ += other.disk_;
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& other) {
  if (!contains(other)) {
    throw UnderflowError(
        "resource underflow: " + toString() + " minus " + other.toString());
  }
  cpus_ -= other.cpus_;
  mem_ -= other.mem_;
  disk_ -= other.disk_;
  return *this;
}

std::string ResourceVector::toString() const {
  return "cpus=" + formatFixed(cpus_, kCpuScale) +
         " mem=" + formatFixed(mem_, kMemScale) +
         " disk=" + formatFixed(disk_, kMemScale);
}

nlohmann::json ResourceVector::toJson() const {
  return nlohmann::json{
      {"cpus", formatFixed(cpus_, kCpuScale)},
      {"mem", formatFixed(mem_, kMemScale)},
      {"disk", formatFixed(disk_, kMemScale)}};
}

ResourceVector ResourceVector::fromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("cpus") || !j.contains("mem")) {
    throw ValidationError("resource object needs cpus and mem");
  }
  return ResourceVector(
      parseFixed(j.at("cpus").get<std::string>(), kCpuScale),
      parseFixed(j.at("mem").get<std::string>(), kMemScale),
      j.contains("disk")
          ? parseFixed(j.at("disk").get<std::string>(), kMemScale)
          : 0);
}

std::string formatFixed(int64_t value, int64_t scale) {
  int64_t whole = value / scale;
  int64_t frac = value % scale;
  std::string out = std::to_string(whole);
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    std::string pad(std::to_string(scale - 1).size() - digits.size(), '0');
    digits = pad + digits;
    while (!digits.empty() && digits.back() == '0') {
      digits.pop_back();
    }
    out += "." + digits;
  }
  return out;
}

int64_t parseFixed(const std::string& text, int64_t scale) {
  if (text.empty()) {
    throw ValidationError("empty fixed-point literal");
  }
  size_t dot = text.find('.');
  std::string wholePart = text.substr(0, dot);
  std::string fracPart = dot == std::string::npos ? "" : text.substr(dot + 1);
  size_t fracWidth = std::to_string(scale - 1).size();
  if (wholePart.empty() || fracPart.size() > fracWidth) {
    throw ValidationError("bad fixed-point literal: " + text);
  }
  for (char c : wholePart + fracPart) {
    if (c < '0' || c > '9') {
      throw ValidationError("bad fixed-point literal: " + text);
    }
  }
  while (fracPart.size() < fracWidth) {
    fracPart += '0';
  }
  int64_t whole = std::strtoll(wholePart.c_str(), nullptr, 10);
  int64_t frac = fracPart.empty() ? 0 : std::strtoll(fracPart.c_str(), nullptr, 10);
  return whole * scale + frac;
}

bool attrsSatisfy(
    const AttributeSet& agent,
    const std::map<std::string, std::string>& required) {
  for (const auto& [name, value] : required) {
    auto it = agent.find(name);
    if (it == agent.end() || it->second != value) {
      return false;
    }
  }
  return true;
}

std::string toString(TaskState state) {
  switch (state) {
    case TaskState::Staging: return "staging";
    case TaskState::Running: return "running";
    case TaskState::Finished: return "finished";
    case TaskState::Failed: return "failed";
    case TaskState::Killed: return "killed";
    case TaskState::Lost: return "lost";
  }
  return "?";
}

const char* toString(TaskEvent event) {
  switch (event) {
    case TaskEvent::Launched: return "launched";
    case TaskEvent::Completed: return "completed";
    case TaskEvent::Failed: return "failed";
    case TaskEvent::Kill: return "kill";
    case TaskEvent::AgentLost: return "agent-lost";
  }
  return "?";
}

bool isTerminal(TaskState state) {
  return state != TaskState::Staging && state != TaskState::Running;
}

TaskState nextTaskState(TaskState current, TaskEvent event) {
  if (event == TaskEvent::AgentLost) {
    if (isTerminal(current)) {
      throw IllegalTransitionError(
          std::string("agent-lost on terminal task state ") +
          toString(current));
    }
    return TaskState::Lost;
  }
  switch (current) {
    case TaskState::Staging:
      if (event == TaskEvent::Launched) return TaskState::Running;
      if (event == TaskEvent::Kill) return TaskState::Killed;
      break;
    case TaskState::Running:
      if (event == TaskEvent::Completed) return TaskState::Finished;
      if (event == TaskEvent::Failed) return TaskState::Failed;
      if (event == TaskEvent::Kill) return TaskState::Killed;
      break;
    default:
      break;
  }
  throw IllegalTransitionError(
      std::string("illegal transition: ") + toString(current) + " + " +
      toString(event));
}

int PortPool::allocate() {
  int candidate = kBasePort;
  for (int used : inUse_) {
    if (used != candidate) {
      break;
    }
    ++candidate;
  }
  inUse_.insert(candidate);
  return candidate;
}

void PortPool::release(int port) {
  inUse_.erase(port);
}

} // namespace offersched
