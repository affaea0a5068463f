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

#ifndef COGSTREAM_EXPLAIN_H_
#define COGSTREAM_EXPLAIN_H_

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/features.h"
#include "cogstream/records.h"

namespace cogstream {

inline constexpr std::size_t kTopFeatures = 5;

// Scores every expanded slot by its distance from a reference level: the
// user's running average of the base feature, or the population average for
// the two counters (whose distance is scaled by the population range). Ties
// go to the larger |value|, then to the slot name.
std::vector<ExplanationItem> select_top_features(
    const ExpandedFeatureVector& x, const UserHistory& history,
    const PopulationStats& population, std::size_t k = kTopFeatures);

// |v| in (0.5, 1] green, (0.25, 0.5] yellow, [0, 0.25] red; |v| > 1 clamps.
Color color_band(double display_value);

std::string describe(const ExplanationItem& item);

struct TrajectoryPoint {
  Timestamp timestamp{};
  double present_probability = 0.0;
  std::string session_id;
};

// The user's 'present' probabilities inside [now - window, now], in time
// order. An unset window keeps every record.
std::vector<TrajectoryPoint> trajectory(
    const std::string& user_id, std::optional<std::chrono::seconds> window,
    const std::vector<PredictionRecord>& records, Timestamp now);

inline constexpr std::chrono::seconds kTwoWeeks{14 * 24 * 3600};

struct AccumulatedConfidence {
  double mean = 0.0;
  double current = 0.0;
};

AccumulatedConfidence accumulated_confidence(
    const std::string& user_id, const std::vector<PredictionRecord>& records);

nlohmann::json explanation_payload(
    const std::vector<ExplanationItem>& items,
    const std::vector<TrajectoryPoint>& points,
    const std::optional<AccumulatedConfidence>& accumulated);

}  // namespace cogstream

#endif  // COGSTREAM_EXPLAIN_H_
