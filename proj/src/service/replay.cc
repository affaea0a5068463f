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

#include "cogstream/service/replay.h"

#include "cogstream/service/event_log.h"

namespace cogstream::service {

nlohmann::json ReplayReport::to_json() const {
  return {{"events", events},
          {"sessions_closed", sessions_closed},
          {"predictions", predictions},
          {"quarantined", quarantined},
          {"trainings", trainings},
          {"mismatches", mismatches},
          {"recomputed", recomputed.to_json()},
          {"logged", logged.to_json()}};
}

ReplayReport replay_log(const std::string& path, const RunConfig& config) {
  ReplayReport report;
  Pipeline pipeline(config);
  ConfusionMatrix logged;
  for (const auto& e : EventLog::read(path)) {
    ++report.events;
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::kUtteranceAdded:
        break;
      case EventKind::kSessionClosed:
        ++report.sessions_closed;
        break;
      case EventKind::kModelTrained:
        ++report.trainings;
        break;
      case EventKind::kPredictionEmitted: {
        DialogueSession s;
        s.user_id = p.at("user_id").get<std::string>();
        s.session_id = p.at("session_id").get<std::string>();
        if (p.contains("label") && !p["label"].is_null()) {
          s.label = parse_label(p["label"].get<std::string>());
        }
        s.utterances.push_back(
            {Speaker::kHuman, "-", from_epoch_seconds(p.at("t").get<std::int64_t>())});
        if (p.at("status") != "ok") {
          ++report.quarantined;
          pipeline.record_quarantine(s);
          break;
        }
        ++report.predictions;
        BaseFeatureVector v;
        const auto values = p.at("features").get<std::vector<double>>();
        if (values.size() != static_cast<std::size_t>(kNumBaseFeatures)) {
          throw Error("event " + std::to_string(e.sequence) + ": bad feature vector");
        }
        for (int id = 1; id <= kNumBaseFeatures; ++id) {
          v.set(id, values[static_cast<std::size_t>(id - 1)]);
        }
        const auto record = pipeline.process_features(s, v);
        const auto original = prediction_record_from_json(p.at("record"));
        if (to_json(record) != to_json(original)) report.mismatches.push_back(s.session_id);
        if (original.truth) {
          const bool truth = *original.truth == Label::kPresent;
          const bool pred = original.predicted == Label::kPresent;
          (truth ? (pred ? logged.tp : logged.fn) : (pred ? logged.fp : logged.tn)) += 1;
        }
        break;
      }
    }
  }
  report.recomputed = pipeline.metrics();
  report.logged = MetricsSnapshot::from_confusion(logged);
  return report;
}

}  // namespace cogstream::service
