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

#ifndef COGSTREAM_TESTS_SERVICE_DRIVER_H_
#define COGSTREAM_TESTS_SERVICE_DRIVER_H_

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cogstream/service/screening_service.h"

namespace cogstream::testing {

namespace fs = std::filesystem;

// A fresh, empty directory under the system temp dir.
inline std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("cogstream-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

struct ScriptedTurn {
  Speaker speaker;
  std::string text;
  std::int64_t t;
};

struct ScriptedSession {
  std::string user_id;
  Label label;
  std::vector<ScriptedTurn> turns;  // the last human turn says goodbye
};

// Deterministic conversations spread over a handful of users. Present
// sessions are shorter, as in the corpus profile.
inline std::vector<ScriptedSession> scripted_sessions(std::size_t n, std::uint64_t seed,
                                                      std::int64_t t0 = 1'704'067'200) {
  static const std::vector<std::string> kWords = {
      "garden", "tea", "walk", "daughter", "market", "radio", "bread", "weather",
      "church", "friend", "letter", "music", "river", "kitchen", "morning", "story"};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution present(0.4);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kWords.size()) - 1);
  std::vector<ScriptedSession> out;
  std::int64_t t = t0;
  for (std::size_t i = 0; i < n; ++i) {
    ScriptedSession s;
    s.user_id = "user" + std::to_string(i % 7);
    s.label = present(rng) ? Label::kPresent : Label::kAbsent;
    const int pairs = s.label == Label::kPresent ? 2 + static_cast<int>(i % 2) : 4 + static_cast<int>(i % 3);
    for (int p = 0; p < pairs; ++p) {
      s.turns.push_back({Speaker::kBot, "Tell me about your day.", t});
      t += 15;
      std::string text;
      const int words = s.label == Label::kPresent ? 3 : 9;
      for (int w = 0; w < words; ++w) text += (w ? " " : "") + kWords[static_cast<std::size_t>(pick(rng))];
      s.turns.push_back({Speaker::kHuman, text, t});
      t += 20;
    }
    s.turns.push_back({Speaker::kHuman, "goodbye", t});
    t += 600;
    out.push_back(std::move(s));
  }
  return out;
}

// Feeds one session turn by turn; returns the session id it was stored under.
inline std::string drive(service::ScreeningService& svc, const ScriptedSession& s) {
  std::string id;
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    service::UtteranceInput in;
    in.speaker = s.turns[i].speaker;
    in.text = s.turns[i].text;
    in.timestamp = from_epoch_seconds(s.turns[i].t);
    if (i == 0) in.label = s.label;
    id = svc.add_utterance(s.user_id, in).session_id;
  }
  return id;
}

inline service::ServiceConfig service_config(const std::string& dir, int scenario,
                                             std::size_t block_size = 100, int n_models = 10) {
  service::ServiceConfig c;
  c.data_dir = dir;
  c.transport = service::TransportMode::kStub;
  c.run.scenario = scenario;
  c.run.block_size = block_size;
  c.run.model = learners::ModelKind::kArfc;
  c.run.model_overrides = {{"arfc", {{"n_models", n_models}}}};
  return c;
}

inline std::unique_ptr<service::ScreeningService> open_service(const service::ServiceConfig& c,
                                                               bool async = false) {
  service::ServiceOptions o;
  o.async = async;
  o.clock = [] { return from_epoch_seconds(1'800'000'000); };
  return std::make_unique<service::ScreeningService>(c, service::make_transport(c), o);
}

inline std::vector<nlohmann::json> records_json(const std::vector<PredictionRecord>& rs,
                                                std::size_t from = 0) {
  std::vector<nlohmann::json> out;
  for (std::size_t i = from; i < rs.size(); ++i) out.push_back(to_json(rs[i]));
  return out;
}

struct DurabilityResult {
  bool state_restored = false;      // pipeline state equal right after restart
  bool continuation_identical = false;
  std::size_t compared = 0;
};

// Processes `first` sessions, copies the data directory as it stands (a
// crash image: every event is flushed on append), restarts a service on the
// copy and feeds `second` more sessions. The records must match an
// uninterrupted reference run bit for bit.
inline DurabilityResult durability_check(const std::string& name, std::size_t first,
                                         std::size_t second, int scenario,
                                         std::size_t block_size, int n_models = 10) {
  const auto sessions = scripted_sessions(first + second, 2024);
  const std::string ref_dir = fresh_dir(name + "-ref");
  const std::string live_dir = fresh_dir(name + "-live");
  const std::string crash_dir = fresh_dir(name + "-crash");

  auto reference = open_service(service_config(ref_dir, scenario, block_size, n_models));
  for (const auto& s : sessions) drive(*reference, s);

  DurabilityResult out;
  {
    auto live = open_service(service_config(live_dir, scenario, block_size, n_models));
    for (std::size_t i = 0; i < first; ++i) drive(*live, sessions[i]);
    const auto before = live->pipeline_state();
    fs::remove_all(crash_dir);
    fs::copy(live_dir, crash_dir, fs::copy_options::recursive);
    live.reset();

    auto restarted = open_service(service_config(crash_dir, scenario, block_size, n_models));
    out.state_restored = restarted->pipeline_state() == before;
    for (std::size_t i = first; i < sessions.size(); ++i) drive(*restarted, sessions[i]);
    const auto got = records_json(restarted->records(), first);
    const auto want = records_json(reference->records(), first);
    out.compared = got.size();
    out.continuation_identical = got.size() == second && got == want;
  }
  for (const auto& d : {ref_dir, live_dir, crash_dir}) fs::remove_all(d);
  return out;
}

}  // namespace cogstream::testing

#endif  // COGSTREAM_TESTS_SERVICE_DRIVER_H_
