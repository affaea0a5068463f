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

#ifndef COGSTREAM_RECORDS_H_
#define COGSTREAM_RECORDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/common.h"
#include "cogstream/features.h"
#include "json.hpp"

namespace cogstream {

enum class Color { kGreen, kYellow, kRed };

std::string_view color_name(Color color);
Color parse_color(std::string_view text);

struct ExplanationItem {
  std::string slot;  // e.g. "f6.current"
  int feature_id = 0;
  Statistic stat = Statistic::kCurrent;
  double value = 0.0;
  double reference = 0.0;
  // value - reference; for counters divided by the population range.
  double deviation = 0.0;
  double relevance = 0.0;
  double display_value = 0.0;
  Color color = Color::kRed;
  std::string description;

  bool counter() const { return is_counter_feature(feature_id); }
};

nlohmann::json to_json(const ExplanationItem& item);
ExplanationItem explanation_item_from_json(const nlohmann::json& j);

struct PredictionRecord {
  std::string user_id;
  std::string session_id;
  std::int64_t sequence = 0;  // 1-based position in the evaluation stream
  Label predicted = Label::kAbsent;
  ClassProbabilities probabilities;
  std::optional<Label> truth;
  std::size_t selected_slots = 0;
  Timestamp timestamp{};
  std::vector<ExplanationItem> explanation;
};

nlohmann::json to_json(const PredictionRecord& record);
PredictionRecord prediction_record_from_json(const nlohmann::json& j);

}  // namespace cogstream

#endif  // COGSTREAM_RECORDS_H_
