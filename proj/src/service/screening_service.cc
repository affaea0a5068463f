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

#include "cogstream/service/screening_service.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cogstream/explain.h"
#include "cogstream/synthdata.h"

namespace cogstream::service {

namespace fs = std::filesystem;

namespace {

// Captures whether a prediction step also trained the model.
class TrainingProbe : public PipelineObserver {
 public:
  void on_train(std::int64_t count, TrainAction action,
                const std::vector<std::int64_t>& samples,
                const learners::Classifier& model) override {
    trained = true;
    this->count = count;
    this->action = action;
    this->samples = samples;
    hash = learners::checkpoint_hash(model);
  }

  bool trained = false;
  std::int64_t count = 0;
  TrainAction action = TrainAction::kSkip;
  std::vector<std::int64_t> samples;
  std::string hash;
};

nlohmann::json features_to_json(const BaseFeatureVector& v) {
  return nlohmann::json(v.values());
}

BaseFeatureVector features_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(kNumBaseFeatures)) {
    throw Error("expected 22 base features");
  }
  BaseFeatureVector v;
  for (int id = 1; id <= kNumBaseFeatures; ++id) {
    v.set(id, values[static_cast<std::size_t>(id - 1)]);
  }
  return v;
}

nlohmann::json optional_label(const std::optional<Label>& label) {
  return label ? nlohmann::json(label_name(*label)) : nlohmann::json(nullptr);
}

std::optional<Label> label_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return parse_label(j[key].get<std::string>());
}

}  // namespace

std::string_view close_reason_name(CloseReason reason) {
  switch (reason) {
    case CloseReason::kFarewell:
      return "farewell";
    case CloseReason::kInactivity:
      return "inactivity";
    case CloseReason::kForced:
      return "forced";
  }
  return "forced";
}

ScreeningService::ScreeningService(ServiceConfig config,
                                   std::unique_ptr<ExtractionTransport> transport,
                                   ServiceOptions options)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      options_(std::move(options)) {
  if (!transport_) throw Error("service needs an extraction transport");
  config_.run.validate();
  fs::create_directories(config_.data_dir);
  pipeline_ = std::make_unique<Pipeline>(config_.run);
  replay();
  log_ = std::make_unique<EventLog>(event_log_path());
  if (options_.async) worker_ = std::thread([this] { worker_loop(); });
  if (!options_.async) process_pending_inline();
}

ScreeningService::~ScreeningService() { stop(); }

std::string ScreeningService::event_log_path() const {
  return (fs::path(config_.data_dir) / "events.jsonl").string();
}

std::string ScreeningService::snapshot_path() const {
  return (fs::path(config_.data_dir) / "snapshot.json").string();
}

Timestamp ScreeningService::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

void ScreeningService::replay() {
  std::int64_t covered = 0;
  if (fs::exists(snapshot_path())) {
    std::ifstream in(snapshot_path());
    const auto snapshot = nlohmann::json::parse(in);
    covered = snapshot.at("covered_sequence").get<std::int64_t>();
    pipeline_ = std::make_unique<Pipeline>(Pipeline::from_json(snapshot.at("pipeline")));
  }
  if (!fs::exists(event_log_path())) return;

  std::map<std::string, DialogueSession> pending;
  std::vector<std::string> pending_order;
  for (const auto& e : EventLog::read(event_log_path())) {
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::kUtteranceAdded: {
        auto& st = users_[p.at("user_id").get<std::string>()];
        const auto sid = p.at("session_id").get<std::string>();
        if (!st.open) {
          st.open = DialogueSession{};
          st.open->user_id = p.at("user_id").get<std::string>();
          st.open->session_id = sid;
        }
        st.next_index = std::max(st.next_index, p.value("next_index", 0));
        st.open->utterances.push_back(
            {parse_speaker(p.at("speaker").get<std::string>()),
             p.at("text").get<std::string>(),
             from_epoch_seconds(p.at("t").get<std::int64_t>())});
        if (auto label = label_from(p, "label")) st.open->label = label;
        break;
      }
      case EventKind::kSessionClosed: {
        auto& st = users_[p.at("user_id").get<std::string>()];
        const auto sid = p.at("session_id").get<std::string>();
        if (!st.open || st.open->session_id != sid) {
          throw Error("event log: close of unknown session " + sid);
        }
        DialogueSession s = std::move(*st.open);
        st.open.reset();
        s.closed = true;
        if (auto label = label_from(p, "label")) s.label = label;
        st.closed_ids.insert(sid);
        pending_order.push_back(sid);
        pending.emplace(sid, std::move(s));
        break;
      }
      case EventKind::kPredictionEmitted: {
        const auto sid = p.at("session_id").get<std::string>();
        pending.erase(sid);
        if (e.sequence <= covered) break;
        DialogueSession s;
        s.user_id = p.at("user_id").get<std::string>();
        s.session_id = sid;
        s.label = label_from(p, "label");
        s.closed = true;
        s.utterances.push_back(
            {Speaker::kHuman, "-", from_epoch_seconds(p.at("t").get<std::int64_t>())});
        if (p.at("status") == "ok") {
          pipeline_->process_features(s, features_from_json(p.at("features")));
        } else {
          pipeline_->record_quarantine(s);
        }
        pipeline_->restore_timing(p.value("elapsed_seconds", pipeline_->metrics().elapsed_seconds),
                                  p.value("extraction_seconds", pipeline_->metrics().extraction_seconds));
        break;
      }
      case EventKind::kModelTrained:
        break;
    }
  }
  // Sessions closed before the crash but never classified go back in line.
  for (const auto& sid : pending_order) {
    auto it = pending.find(sid);
    if (it == pending.end()) continue;
    queue_.push_back(Job{std::move(it->second),
                         std::make_shared<std::promise<CloseOutcome>>()});
  }
}

UtteranceResult ScreeningService::add_utterance(const std::string& user_id,
                                                const UtteranceInput& input) {
  if (user_id.empty()) throw BadRequest("empty user id");
  if (input.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw BadRequest("utterance text must not be blank");
  }
  const Timestamp t = input.timestamp.value_or(now());
  UtteranceResult result;
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    auto& st = users_[user_id];
    if (input.session_id) {
      const bool is_open = st.open && st.open->session_id == *input.session_id;
      if (!is_open && st.closed_ids.count(*input.session_id)) {
        throw SessionConflict("session " + *input.session_id + " is already closed");
      }
      if (!is_open && st.open) {
        throw SessionConflict("user " + user_id + " already has open session " +
                              st.open->session_id);
      }
    }
    if (st.open && detect_session_end(*st.open, t, config_.session_policy)) {
      close_locked(st, CloseReason::kInactivity);
    }
    if (st.open && t < st.open->utterances.back().timestamp) {
      throw BadRequest("utterance timestamp precedes the previous utterance");
    }
    if (!st.open) {
      DialogueSession s;
      s.user_id = user_id;
      if (input.session_id) {
        s.session_id = *input.session_id;
      } else {
        do {
          s.session_id = user_id + "-" + std::to_string(st.next_index++);
        } while (st.closed_ids.count(s.session_id));
      }
      st.open = std::move(s);
    }
    st.open->utterances.push_back({input.speaker, input.text, t});
    if (input.label) st.open->label = input.label;
    nlohmann::json payload = {{"user_id", user_id},
                              {"session_id", st.open->session_id},
                              {"speaker", speaker_name(input.speaker)},
                              {"text", input.text},
                              {"t", to_epoch_seconds(t)},
                              {"next_index", st.next_index}};
    if (input.label) payload["label"] = label_name(*input.label);
    log_->append(EventKind::kUtteranceAdded, std::move(payload));

    result.session_id = st.open->session_id;
    if (input.speaker == Speaker::kHuman &&
        contains_farewell(input.text, config_.session_policy.farewells)) {
      close_locked(st, CloseReason::kFarewell);
      result.closed = true;
    }
  }
  if (!options_.async) process_pending_inline();
  return result;
}

CloseOutcome ScreeningService::close_current(const std::string& user_id,
                                             std::optional<Label> label) {
  std::shared_future<CloseOutcome> done;
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    auto it = users_.find(user_id);
    if (it == users_.end() || !it->second.open) {
      throw NotFound("no open session for user " + user_id);
    }
    if (label) it->second.open->label = label;
    done = close_locked(it->second, CloseReason::kForced);
  }
  if (!options_.async) process_pending_inline();
  return done.get();
}

std::shared_future<CloseOutcome> ScreeningService::close_locked(UserState& st,
                                                                CloseReason reason) {
  DialogueSession s = std::move(*st.open);
  st.open.reset();
  s.closed = true;
  st.closed_ids.insert(s.session_id);
  log_->append(EventKind::kSessionClosed, {{"user_id", s.user_id},
                                           {"session_id", s.session_id},
                                           {"reason", close_reason_name(reason)},
                                           {"label", optional_label(s.label)}});
  auto promise = std::make_shared<std::promise<CloseOutcome>>();
  std::shared_future<CloseOutcome> future = promise->get_future().share();
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    queue_.push_back(Job{std::move(s), std::move(promise)});
  }
  queue_cv_.notify_one();
  return future;
}

std::size_t ScreeningService::sweep(Timestamp now) {
  std::size_t closed = 0;
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    for (auto& [user, st] : users_) {
      if (st.open && detect_session_end(*st.open, now, config_.session_policy)) {
        close_locked(st, CloseReason::kInactivity);
        ++closed;
      }
    }
  }
  if (!options_.async) process_pending_inline();
  return closed;
}

void ScreeningService::start_sweeper() {
  if (sweeper_.joinable()) return;
  sweeper_ = std::thread([this] {
    std::unique_lock<std::mutex> lock(sweeper_mu_);
    while (!sweeper_cv_.wait_for(lock, config_.sweep_interval,
                                 [this] { return sweeper_stopping_; })) {
      lock.unlock();
      try {
        sweep(now());
      } catch (const std::exception& e) {
        std::clog << "cogstream: sweep failed: " << e.what() << '\n';
      }
      lock.lock();
    }
  });
}

void ScreeningService::process(Job& job) {
  CloseOutcome outcome{job.session.user_id, job.session.session_id, std::nullopt};
  try {
    std::optional<BaseFeatureVector> features;
    const auto started = std::chrono::steady_clock::now();
    try {
      features = extract_base_features(job.session, *transport_).features;
    } catch (const ExtractionFailed& e) {
      std::clog << "cogstream: " << e.what() << '\n';
    }
    const std::chrono::duration<double> extraction = std::chrono::steady_clock::now() - started;

    std::unique_lock<std::shared_mutex> lock(pipeline_mu_);
    pipeline_->add_extraction_time(extraction.count());
    nlohmann::json payload = {{"user_id", job.session.user_id},
                              {"session_id", job.session.session_id},
                              {"label", optional_label(job.session.label)},
                              {"t", to_epoch_seconds(job.session.utterances.back().timestamp)}};
    TrainingProbe probe;
    if (features) {
      pipeline_->set_observer(&probe);
      try {
        outcome.record = pipeline_->process_features(job.session, *features);
      } catch (...) {
        pipeline_->set_observer(nullptr);
        throw;
      }
      pipeline_->set_observer(nullptr);
      payload["status"] = "ok";
      payload["features"] = features_to_json(*features);
      payload["record"] = to_json(*outcome.record);
    } else {
      pipeline_->record_quarantine(job.session);
      payload["status"] = "quarantined";
    }
    payload["elapsed_seconds"] = pipeline_->metrics().elapsed_seconds;
    payload["extraction_seconds"] = pipeline_->metrics().extraction_seconds;
    const auto event = log_->append(EventKind::kPredictionEmitted, std::move(payload));
    if (probe.trained) {
      write_snapshot(event.sequence);
      log_->append(EventKind::kModelTrained, {{"count", probe.count},
                                              {"action", train_action_name(probe.action)},
                                              {"samples", probe.samples},
                                              {"checkpoint_hash", probe.hash},
                                              {"covered_sequence", event.sequence}});
    }
    job.done->set_value(std::move(outcome));
  } catch (...) {
    job.done->set_exception(std::current_exception());
  }
}

void ScreeningService::write_snapshot(std::int64_t covered_sequence) {
  const nlohmann::json snapshot = {{"covered_sequence", covered_sequence},
                                   {"pipeline", pipeline_->to_json()}};
  const std::string tmp = snapshot_path() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snapshot.dump();
    out.flush();
    if (!out) throw Error("cannot write snapshot '" + tmp + "'");
  }
  fs::rename(tmp, snapshot_path());
}

void ScreeningService::process_pending_inline() {
  std::lock_guard<std::mutex> guard(process_mu_);
  for (;;) {
    Job job;
    {
      std::lock_guard<std::mutex> lock(queue_mu_);
      if (queue_.empty()) break;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    process(job);
  }
}

void ScreeningService::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock<std::mutex> lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    {
      std::lock_guard<std::mutex> guard(process_mu_);
      process(job);
    }
    {
      std::lock_guard<std::mutex> lock(queue_mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void ScreeningService::drain() {
  if (!options_.async) {
    process_pending_inline();
    return;
  }
  std::unique_lock<std::mutex> lock(queue_mu_);
  idle_cv_.wait(lock, [this] { return stopping_ || (queue_.empty() && !busy_); });
}

void ScreeningService::stop() {
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  idle_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  {
    std::lock_guard<std::mutex> lock(sweeper_mu_);
    sweeper_stopping_ = true;
  }
  sweeper_cv_.notify_all();
  if (sweeper_.joinable()) sweeper_.join();
}

bool ScreeningService::has_user(const std::string& user_id) const {
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    if (users_.count(user_id)) return true;
  }
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  return pipeline_->histories().count(user_id) > 0;
}

MetricsSnapshot ScreeningService::metrics() const {
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  return pipeline_->metrics();
}

std::vector<PredictionRecord> ScreeningService::records() const {
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  return pipeline_->records();
}

std::optional<PredictionRecord> ScreeningService::record_for(
    const std::string& session_id) const {
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  const auto& records = pipeline_->records();
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->session_id == session_id) return *it;
  }
  return std::nullopt;
}

nlohmann::json ScreeningService::trajectory_payload(
    const std::string& user_id, std::optional<std::chrono::seconds> window,
    Timestamp now) const {
  if (!has_user(user_id)) throw NotFound("unknown user " + user_id);
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  const auto& records = pipeline_->records();
  std::optional<AccumulatedConfidence> acc;
  try {
    acc = accumulated_confidence(user_id, records);
  } catch (const Error&) {
  }
  auto j = explanation_payload({}, trajectory(user_id, window, records, now), acc);
  j.erase("items");
  j["user_id"] = user_id;
  j["window_days"] = window ? nlohmann::json(window->count() / 86400.0)
                            : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ScreeningService::explanation_for(const std::string& user_id,
                                                 Timestamp now) const {
  if (!has_user(user_id)) throw NotFound("unknown user " + user_id);
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  const auto* items = pipeline_->latest_explanation(user_id);
  if (items == nullptr) throw NotFound("no predictions for user " + user_id);
  const auto& records = pipeline_->records();
  auto j = explanation_payload(*items, trajectory(user_id, kTwoWeeks, records, now),
                               accumulated_confidence(user_id, records));
  j["user_id"] = user_id;
  return j;
}

nlohmann::json ScreeningService::close_payload(const CloseOutcome& outcome,
                                               Timestamp now) const {
  nlohmann::json j = {{"user_id", outcome.user_id}, {"session_id", outcome.session_id}};
  if (!outcome.record) {
    j["status"] = "quarantined";
    j["record"] = nullptr;
    j["explanation"] = nullptr;
    return j;
  }
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  const auto& records = pipeline_->records();
  j["status"] = "ok";
  j["record"] = to_json(*outcome.record);
  j["explanation"] =
      explanation_payload(outcome.record->explanation,
                          trajectory(outcome.user_id, kTwoWeeks, records, now),
                          accumulated_confidence(outcome.user_id, records));
  return j;
}

nlohmann::json ScreeningService::pipeline_state() const {
  std::shared_lock<std::shared_mutex> lock(pipeline_mu_);
  return pipeline_->to_json();
}

nlohmann::json ScreeningService::sessions_state() const {
  std::lock_guard<std::mutex> lock(sessions_mu_);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [user, st] : users_) {
    j[user] = {{"open", st.open ? session_to_json(*st.open) : nlohmann::json(nullptr)},
               {"closed", st.closed_ids},
               {"next_index", st.next_index}};
  }
  return j;
}

}  // namespace cogstream::service
