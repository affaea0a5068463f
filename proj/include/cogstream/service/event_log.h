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

#ifndef COGSTREAM_SERVICE_EVENT_LOG_H_
#define COGSTREAM_SERVICE_EVENT_LOG_H_

#include <cstdint>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cogstream/common.h"
#include "json.hpp"

namespace cogstream::service {

enum class EventKind { kUtteranceAdded, kSessionClosed, kPredictionEmitted, kModelTrained };

std::string_view event_kind_name(EventKind kind);
EventKind parse_event_kind(std::string_view text);

struct EventRecord {
  std::int64_t sequence = 0;
  EventKind kind = EventKind::kUtteranceAdded;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static EventRecord from_json(const nlohmann::json& j);
};

// Append-only JSON-lines log with strictly increasing sequence numbers. Every
// append is flushed before it returns.
class EventLog {
 public:
  explicit EventLog(std::string path);

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  EventRecord append(EventKind kind, nlohmann::json payload);

  std::int64_t last_sequence() const;
  const std::string& path() const { return path_; }

  // Reads every record of a log file. A torn final line (a crash during the
  // write) is ignored; any other malformed line throws Error.
  static std::vector<EventRecord> read(const std::string& path);

 private:
  void drop_torn_tail();

  std::string path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::int64_t last_ = 0;
};

}  // namespace cogstream::service

#endif  // COGSTREAM_SERVICE_EVENT_LOG_H_
