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

#include "offersched/events.hpp"

#include <sstream>

#include "offersched/errors.hpp"

namespace offersched {

uint64_t EventLog::append(SimTime t, std::string kind, nlohmann::json payload) {
  uint64_t seq = records_.size();
  if (!records_.empty() && t < records_.back().t) {
    throw Error(
        "event log time went backwards at seq " + std::to_string(seq));
  }
  records_.push_back(LogRecord{t, seq, std::move(kind), std::move(payload)});
  return seq;
}

void EventLog::writeNdjson(std::ostream& out) const {
  for (const LogRecord& r : records_) {
    nlohmann::json line{
        {"t", r.t}, {"seq", r.seq}, {"kind", r.kind}, {"payload", r.payload}};
    out << line.dump() << "\n";
  }
}

std::string EventLog::toNdjson() const {
  std::ostringstream out;
  writeNdjson(out);
  return out.str();
}

EventLog EventLog::fromNdjson(std::istream& in) {
  EventLog log;
  std::string line;
  size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) {
      continue;
    }
    nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw MalformedLogError(
          "line " + std::to_string(lineNo) + ": not a JSON object");
    }
    if (!parsed.contains("t") || !parsed.contains("seq") ||
        !parsed.contains("kind") || !parsed.contains("payload") ||
        !parsed["t"].is_number_integer() ||
        !parsed["seq"].is_number_unsigned() || !parsed["kind"].is_string()) {
      throw MalformedLogError(
          "line " + std::to_string(lineNo) + ": missing or mistyped field");
    }
    LogRecord r;
    r.t = parsed["t"].get<SimTime>();
    r.seq = parsed["seq"].get<uint64_t>();
    r.kind = parsed["kind"].get<std::string>();
    r.payload = parsed["payload"];
    if (!log.records_.empty()) {
      const LogRecord& prev = log.records_.back();
      if (r.t < prev.t || r.seq != prev.seq + 1) {
        throw MalformedLogError(
            "line " + std::to_string(lineNo) + ": broken (t, seq) order");
      }
    } else if (r.seq != 0) {
      throw MalformedLogError("log does not start at seq 0");
    }
    log.records_.push_back(std::move(r));
  }
  return log;
}

EventLog EventLog::fromNdjsonText(const std::string& text) {
  std::istringstream in(text);
  return fromNdjson(in);
}

} // namespace offersched
