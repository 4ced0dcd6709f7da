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

#ifndef OFFERSCHED_ERRORS_HPP
#define OFFERSCHED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace offersched {

// Base for all domain errors raised by the scheduler and the simulator.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Resource accounting would go negative. Always a bug in the caller's
// bookkeeping, never a recoverable condition.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

// Fewer than two of the three masters are alive.
class NoQuorumError : public Error {
 public:
  using Error::Error;
};

// A response arrived for an offer that is no longer outstanding.
class OfferExpiredError : public Error {
 public:
  using Error::Error;
};

// Accepted tasks exceed the resources granted by the offer.
class OverCommitError : public Error {
 public:
  using Error::Error;
};

// Task state machine received an event not legal in its current state.
class IllegalTransitionError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a documented schema rule.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A CLUSTER or LIKE constraint referenced an attribute the agent lacks.
class UnknownFieldError : public Error {
 public:
  using Error::Error;
};

class UnknownAppError : public Error {
 public:
  using Error::Error;
};

class UnknownVersionError : public Error {
 public:
  using Error::Error;
};

// A build job named a queue label that was never configured.
class UnknownLabelError : public Error {
 public:
  using Error::Error;
};

class ScenarioValidationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A failure injection referenced a target that does not exist.
class UnknownTargetError : public ScenarioValidationError {
 public:
  using ScenarioValidationError::ScenarioValidationError;
};

// Raised in verification mode when a state sweep fails after an event.
class InvariantViolationError : public Error {
 public:
  InvariantViolationError(const std::string& what, uint64_t eventIndex)
    : Error(what + " (after event #" + std::to_string(eventIndex) + ")"),
      eventIndex_(eventIndex) {}

  uint64_t eventIndex() const { return eventIndex_; }

 private:
  uint64_t eventIndex_;
};

// An event log failed structural validation on import.
class MalformedLogError : public Error {
 public:
  using Error::Error;
};

// `compare` was pointed at a scenario without a static partition map.
class MissingStaticMapError : public Error {
 public:
  using Error::Error;
};

} // namespace offersched

#endif // OFFERSCHED_ERRORS_HPP
