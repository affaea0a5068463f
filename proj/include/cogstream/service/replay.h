/*
 * Copyright 2024 The Cogstream Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COGSTREAM_SERVICE_REPLAY_H_
#define COGSTREAM_SERVICE_REPLAY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cogstream/pipeline.h"

namespace cogstream::service {

struct ReplayReport {
  std::int64_t events = 0;
  std::int64_t sessions_closed = 0;
  std::int64_t predictions = 0;
  std::int64_t quarantined = 0;
  std::int64_t trainings = 0;
  // Sessions whose recomputed record differs from the logged one.
  std::vector<std::string> mismatches;
  // Metrics of a fresh pipeline fed with the logged features.
  MetricsSnapshot recomputed;
  // Confusion-matrix metrics of the logged records themselves.
  MetricsSnapshot logged;

  nlohmann::json to_json() const;
};

// Read-only recomputation of a service event log from scratch.
ReplayReport replay_log(const std::string& path, const RunConfig& config);

}  // namespace cogstream::service

#endif  // COGSTREAM_SERVICE_REPLAY_H_
