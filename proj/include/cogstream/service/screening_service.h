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

#ifndef COGSTREAM_SERVICE_SCREENING_SERVICE_H_
#define COGSTREAM_SERVICE_SCREENING_SERVICE_H_

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "cogstream/pipeline.h"
#include "cogstream/service/config.h"
#include "cogstream/service/event_log.h"

namespace cogstream::service {

class BadRequest : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class SessionConflict : public Error {
 public:
  using Error::Error;
};

struct UtteranceInput {
  Speaker speaker = Speaker::kHuman;
  std::string text;
  std::optional<Timestamp> timestamp;     // defaults to the service clock
  std::optional<std::string> session_id;  // must name the open session
  std::optional<Label> label;             // evaluation label for the session
};

struct UtteranceResult {
  std::string session_id;
  bool closed = false;
};

enum class CloseReason { kFarewell, kInactivity, kForced };

std::string_view close_reason_name(CloseReason reason);

struct CloseOutcome {
  std::string user_id;
  std::string session_id;
  std::optional<PredictionRecord> record;  // unset when quarantined
};

struct ServiceOptions {
  // Run classification on a background worker. When false, closures are
  // processed on the calling thread before the call returns.
  bool async = true;
  std::function<Timestamp()> clock;  // defaults to the system clock
};

// Live wrapper around one Pipeline: ingests utterances, detects session ends,
// serializes closed sessions through a single classification queue and
// persists everything to an event log plus model snapshots under data_dir.
// Constructing a service on an existing data_dir replays the log.
class ScreeningService {
 public:
  ScreeningService(ServiceConfig config,
                   std::unique_ptr<ExtractionTransport> transport,
                   ServiceOptions options = {});
  ~ScreeningService();

  ScreeningService(const ScreeningService&) = delete;
  ScreeningService& operator=(const ScreeningService&) = delete;

  UtteranceResult add_utterance(const std::string& user_id, const UtteranceInput& input);

  // Forces closure of the user's open session and waits for its prediction.
  // Throws NotFound when no session is open.
  CloseOutcome close_current(const std::string& user_id,
                             std::optional<Label> label = std::nullopt);

  // Closes every open session idle for longer than the inactivity limit.
  std::size_t sweep(Timestamp now);
  void start_sweeper();

  // Blocks until every queued closure has been classified.
  void drain();
  // Stops the worker and sweeper threads; queued work is left in the log.
  void stop();

  bool has_user(const std::string& user_id) const;
  MetricsSnapshot metrics() const;
  std::vector<PredictionRecord> records() const;
  std::optional<PredictionRecord> record_for(const std::string& session_id) const;
  // Throws NotFound for an unknown user.
  nlohmann::json trajectory_payload(const std::string& user_id,
                                    std::optional<std::chrono::seconds> window,
                                    Timestamp now) const;
  nlohmann::json explanation_for(const std::string& user_id, Timestamp now) const;
  nlohmann::json close_payload(const CloseOutcome& outcome, Timestamp now) const;

  nlohmann::json pipeline_state() const;
  nlohmann::json sessions_state() const;

  Timestamp now() const;
  const ServiceConfig& config() const { return config_; }
  std::string event_log_path() const;
  std::string snapshot_path() const;

 private:
  struct UserState {
    std::optional<DialogueSession> open;
    std::set<std::string> closed_ids;
    int next_index = 0;
  };
  struct Job {
    DialogueSession session;
    std::shared_ptr<std::promise<CloseOutcome>> done;
  };

  void replay();
  std::shared_future<CloseOutcome> close_locked(UserState& state, CloseReason reason);
  void process(Job& job);
  void process_pending_inline();
  void worker_loop();
  void write_snapshot(std::int64_t covered_sequence);

  ServiceConfig config_;
  std::unique_ptr<ExtractionTransport> transport_;
  ServiceOptions options_;
  std::unique_ptr<EventLog> log_;

  mutable std::mutex sessions_mu_;
  std::map<std::string, UserState> users_;

  mutable std::shared_mutex pipeline_mu_;
  std::unique_ptr<Pipeline> pipeline_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<Job> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::mutex process_mu_;
  std::thread worker_;

  std::mutex sweeper_mu_;
  std::condition_variable sweeper_cv_;
  bool sweeper_stopping_ = false;
  std::thread sweeper_;
};

}  // namespace cogstream::service

#endif  // COGSTREAM_SERVICE_SCREENING_SERVICE_H_
