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

#ifndef OFFERSCHED_VERIFY_HPP
#define OFFERSCHED_VERIFY_HPP

#include <cstddef>

#include "offersched/build.hpp"
#include "offersched/cluster.hpp"
#include "offersched/master.hpp"
#include "offersched/service.hpp"

namespace offersched {

// Exact accounting sweep over the whole cluster; throws
// InvariantViolationError naming the offending check and event index.
// Checks: allocated + offered contained in total per agent; allocated equals
// the request sum of the agent's non-terminal tasks; offered equals the sum
// of outstanding offers on the agent, with at most one per agent; per
// framework, tracked allocation equals its non-terminal task sum.
void verifyCluster(const Cluster& cluster, const Allocator& allocator,
                   size_t eventIndex);

// Full-world sweep: verifyCluster plus framework-level invariants —
// constraint safety and instance bounds for every app, and work
// conservation (no waiting job beside an idle builder of its label).
void verifyWorld(const Cluster& cluster, const Allocator& allocator,
                 const ServiceFramework* services, const BuildFramework* builds,
                 size_t eventIndex);

} // namespace offersched

#endif // OFFERSCHED_VERIFY_HPP
