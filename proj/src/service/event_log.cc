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

#include "cogstream/service/event_log.h"

#include <filesystem>
#include <iterator>

namespace cogstream::service {

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kUtteranceAdded:
      return "utterance_added";
    case EventKind::kSessionClosed:
      return "session_closed";
    case EventKind::kPredictionEmitted:
      return "prediction_emitted";
    case EventKind::kModelTrained:
      return "model_trained";
  }
  return "utterance_added";
}

EventKind parse_event_kind(std::string_view text) {
  for (auto kind : {EventKind::kUtteranceAdded, EventKind::kSessionClosed,
                    EventKind::kPredictionEmitted, EventKind::kModelTrained}) {
    if (event_kind_name(kind) == text) return kind;
  }
  throw Error("unknown event kind '" + std::string(text) + "'");
}

nlohmann::json EventRecord::to_json() const {
  return {{"seq", sequence}, {"kind", event_kind_name(kind)}, {"payload", payload}};
}

EventRecord EventRecord::from_json(const nlohmann::json& j) {
  EventRecord e;
  e.sequence = j.at("seq").get<std::int64_t>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.payload = j.at("payload");
  return e;
}

EventLog::EventLog(std::string path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    const auto existing = read(path_);
    if (!existing.empty()) last_ = existing.back().sequence;
    drop_torn_tail();
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw Error("cannot open event log '" + path_ + "'");
}

// A crash can leave a partial last line. Cut the file back to the end of the
// last complete record so new appends start on a fresh line.
void EventLog::drop_torn_tail() {
  std::string content;
  {
    std::ifstream in(path_, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::size_t good = 0;
  std::size_t pos = 0;
  bool needs_newline = false;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    if (!terminated) nl = content.size();
    const std::string line = content.substr(pos, nl - pos);
    if (!line.empty()) {
      try {
        EventRecord::from_json(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception&) {
        break;
      }
    }
    good = terminated ? nl + 1 : nl;
    needs_newline = !terminated && !line.empty();
    pos = nl + 1;
  }
  if (good < content.size()) std::filesystem::resize_file(path_, good);
  if (needs_newline) {
    std::ofstream fix(path_, std::ios::app);
    fix << '\n';
  }
}

EventRecord EventLog::append(EventKind kind, nlohmann::json payload) {
  std::lock_guard<std::mutex> lock(mu_);
  EventRecord e{last_ + 1, kind, std::move(payload)};
  out_ << e.to_json().dump() << '\n';
  out_.flush();
  if (!out_) throw Error("write to event log '" + path_ + "' failed");
  last_ = e.sequence;
  return e;
}

std::int64_t EventLog::last_sequence() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_;
}

std::vector<EventRecord> EventLog::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event log '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  std::vector<EventRecord> events;
  events.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      auto e = EventRecord::from_json(nlohmann::json::parse(lines[i]));
      if (!events.empty() && e.sequence <= events.back().sequence) {
        throw Error("event log '" + path + "': sequence " +
                    std::to_string(e.sequence) + " is not increasing");
      }
      events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      if (i + 1 == lines.size()) break;
      throw Error("event log '" + path + "' line " + std::to_string(i + 1) +
                  ": " + ex.what());
    }
  }
  return events;
}

}  // namespace cogstream::service
