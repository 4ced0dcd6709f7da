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

#ifndef OFFERSCHED_EVENTS_HPP
#define OFFERSCHED_EVENTS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "offersched/resources.hpp"

namespace offersched {

struct LogRecord {
  SimTime t = 0;
  uint64_t seq = 0;
  std::string kind;
  nlohmann::json payload;
};

// Append-only, totally ordered by (t, seq). Replaying the same scenario and
// seed produces a byte-identical ndjson export.
class EventLog {
 public:
  uint64_t append(SimTime t, std::string kind, nlohmann::json payload);

  const std::vector<LogRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }

  std::string toNdjson() const;
  void writeNdjson(std::ostream& out) const;

  // Structural validation only: one JSON object per line with t/seq/kind,
  // t non-decreasing, seq strictly increasing. Throws MalformedLogError.
  static EventLog fromNdjson(std::istream& in);
  static EventLog fromNdjsonText(const std::string& text);

 private:
  std::vector<LogRecord> records_;
};

} // namespace offersched

#endif // OFFERSCHED_EVENTS_HPP
