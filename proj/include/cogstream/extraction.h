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

#ifndef COGSTREAM_EXTRACTION_H_
#define COGSTREAM_EXTRACTION_H_

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogstream/common.h"
#include "cogstream/transport.h"

namespace cogstream {

inline constexpr int kNumBaseFeatures = 22;
inline constexpr int kNumScoredFeatures = 20;
inline constexpr int kInteractionsFeature = 9;
inline constexpr int kWordsFeature = 10;

struct FeatureInfo {
  int id;                      // 1..22
  std::string_view name;       // display name
  std::string_view reply_key;  // field name in the extraction reply; empty for counters
};

const std::array<FeatureInfo, kNumBaseFeatures>& feature_catalog();
const FeatureInfo& feature_info(int id);

inline bool is_counter_feature(int id) {
  return id == kInteractionsFeature || id == kWordsFeature;
}

// Ids of the model-scored features, in reply-schema order (1..8, 11..22).
const std::array<int, kNumScoredFeatures>& scored_feature_ids();

enum class Speaker { kBot, kHuman };

std::string_view speaker_name(Speaker speaker);
Speaker parse_speaker(std::string_view text);

struct Utterance {
  Speaker speaker = Speaker::kHuman;
  std::string text;
  Timestamp timestamp{};
};

struct DialogueSession {
  std::string user_id;
  std::string session_id;
  std::vector<Utterance> utterances;
  bool closed = false;
  std::optional<Label> label;

  // Checks the Utterance invariants: non-blank text, non-decreasing times.
  void validate() const;
};

// Scores in reply-schema order (see scored_feature_ids()).
using ReplyScores = std::array<double, kNumScoredFeatures>;

class BaseFeatureVector {
 public:
  BaseFeatureVector() { values_.fill(0.0); }
  static BaseFeatureVector from_parts(const ReplyScores& scores,
                                      std::int64_t interactions,
                                      std::int64_t words);

  // 1-based feature id.
  double at(int id) const { return values_.at(static_cast<std::size_t>(id - 1)); }
  void set(int id, double value);

  std::int64_t interactions() const {
    return static_cast<std::int64_t>(at(kInteractionsFeature));
  }
  std::int64_t words() const {
    return static_cast<std::int64_t>(at(kWordsFeature));
  }

  const std::array<double, kNumBaseFeatures>& values() const { return values_; }

  friend bool operator==(const BaseFeatureVector&,
                         const BaseFeatureVector&) = default;

 private:
  std::array<double, kNumBaseFeatures> values_;
};

struct SessionEndPolicy {
  std::chrono::seconds inactivity{180};
  std::vector<std::string> farewells{"goodbye", "bye", "farewell", "see you"};
};

// True when the session has been idle for longer than the inactivity limit or
// the last human utterance contains a farewell phrase (case-insensitive,
// whole words).
bool detect_session_end(const DialogueSession& session, Timestamp now,
                        const SessionEndPolicy& policy = {});

bool contains_farewell(std::string_view text,
                       const std::vector<std::string>& farewells);

std::int64_t count_human_interactions(const DialogueSession& session);
std::int64_t count_words(const DialogueSession& session);

std::string render_transcript(const DialogueSession& session);
std::string build_extraction_prompt(const DialogueSession& session);

class MalformedReply : public Error {
 public:
  using Error::Error;
};

class MissingField : public MalformedReply {
 public:
  explicit MissingField(std::string field)
      : MalformedReply("reply is missing field '" + field + "'"),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ExtractionFailed : public Error {
 public:
  using Error::Error;
};

// Locates the first balanced JSON object in the reply and reads the 20 scored
// fields. Values outside [0,1] are clamped.
ReplyScores parse_extraction_response(std::string_view reply);

// Inverse of parse_extraction_response: the reply-schema object.
std::string serialize_scores(const ReplyScores& scores);

// Returns the [begin, end) range of the first balanced {...} object, honoring
// JSON string literals; nullopt when there is none.
std::optional<std::pair<std::size_t, std::size_t>> find_balanced_object(
    std::string_view text);

struct ExtractionResult {
  BaseFeatureVector features;
  int attempts = 0;
};

ExtractionResult extract_base_features(const DialogueSession& session,
                                       ExtractionTransport& transport);

}  // namespace cogstream

#endif  // COGSTREAM_EXTRACTION_H_
