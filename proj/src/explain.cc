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

#include "cogstream/explain.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cogstream {

std::string_view color_name(Color color) {
  switch (color) {
    case Color::kGreen:
      return "green";
    case Color::kYellow:
      return "yellow";
    case Color::kRed:
      return "red";
  }
  return "red";
}

Color parse_color(std::string_view text) {
  if (text == "green") return Color::kGreen;
  if (text == "yellow") return Color::kYellow;
  if (text == "red") return Color::kRed;
  throw Error("unknown color: " + std::string(text));
}

nlohmann::json to_json(const ExplanationItem& item) {
  return {{"slot", item.slot},
          {"feature_id", item.feature_id},
          {"statistic", statistic_name(item.stat)},
          {"value", item.value},
          {"reference", item.reference},
          {"deviation", item.deviation},
          {"relevance", item.relevance},
          {"display_value", item.display_value},
          {"color", color_name(item.color)},
          {"description", item.description}};
}

ExplanationItem explanation_item_from_json(const nlohmann::json& j) {
  ExplanationItem item;
  item.slot = j.at("slot").get<std::string>();
  auto ref = parse_slot_name(item.slot);
  if (!ref) throw Error("unknown slot: " + item.slot);
  item.feature_id = ref->feature_id;
  item.stat = ref->stat;
  item.value = j.at("value").get<double>();
  item.reference = j.at("reference").get<double>();
  item.deviation = j.at("deviation").get<double>();
  item.relevance = j.value("relevance", std::abs(item.deviation));
  item.display_value = j.at("display_value").get<double>();
  item.color = parse_color(j.at("color").get<std::string>());
  item.description = j.value("description", std::string());
  return item;
}

nlohmann::json to_json(const PredictionRecord& record) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : record.explanation) items.push_back(to_json(item));
  nlohmann::json j = {
      {"user_id", record.user_id},
      {"session_id", record.session_id},
      {"sequence", record.sequence},
      {"predicted", label_name(record.predicted)},
      {"p_present", record.probabilities.present},
      {"p_absent", record.probabilities.absent},
      {"selected_slots", record.selected_slots},
      {"t", to_epoch_seconds(record.timestamp)},
      {"explanation", std::move(items)}};
  j["truth"] = record.truth ? nlohmann::json(label_name(*record.truth))
                            : nlohmann::json(nullptr);
  return j;
}

PredictionRecord prediction_record_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  r.user_id = j.at("user_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.sequence = j.at("sequence").get<std::int64_t>();
  r.predicted = parse_label(j.at("predicted").get<std::string>());
  r.probabilities.present = j.at("p_present").get<double>();
  r.probabilities.absent = j.at("p_absent").get<double>();
  r.selected_slots = j.at("selected_slots").get<std::size_t>();
  r.timestamp = from_epoch_seconds(j.at("t").get<std::int64_t>());
  if (j.contains("truth") && !j["truth"].is_null()) {
    r.truth = parse_label(j["truth"].get<std::string>());
  }
  for (const auto& item : j.at("explanation")) {
    r.explanation.push_back(explanation_item_from_json(item));
  }
  return r;
}

Color color_band(double display_value) {
  double a = std::abs(display_value);
  if (std::isnan(a)) return Color::kRed;
  a = std::min(a, 1.0);
  if (a > 0.5) return Color::kGreen;
  if (a > 0.25) return Color::kYellow;
  return Color::kRed;
}

std::vector<ExplanationItem> select_top_features(
    const ExpandedFeatureVector& x, const UserHistory& history,
    const PopulationStats& population, std::size_t k) {
  if (history.empty()) throw Error("empty history");
  std::vector<ExplanationItem> items;
  items.reserve(kNumExpandedSlots);
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    for (int s = 0; s < kNumStatistics; ++s) {
      auto stat = static_cast<Statistic>(s);
      ExplanationItem item;
      item.feature_id = f;
      item.stat = stat;
      item.slot = slot_name(f, stat);
      item.value = x.at(f, stat);
      if (is_counter_feature(f)) {
        item.reference = population.mean(f);
        double lo = population.min(f);
        double range = population.max(f) - lo;
        if (range > 0) {
          item.deviation = (item.value - item.reference) / range;
          item.display_value = std::clamp((item.value - lo) / range, 0.0, 1.0);
        }
      } else {
        item.reference = history.running_average(f);
        item.deviation = item.value - item.reference;
        item.display_value = item.value;
      }
      item.relevance = std::abs(item.deviation);
      item.color = color_band(item.display_value);
      items.push_back(std::move(item));
    }
  }
  auto better = [](const ExplanationItem& a, const ExplanationItem& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    double va = std::abs(a.value), vb = std::abs(b.value);
    if (va != vb) return va > vb;
    return a.slot < b.slot;
  };
  k = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<long>(k),
                    items.end(), better);
  items.resize(k);
  for (auto& item : items) item.description = describe(item);
  return items;
}

namespace {

std::string_view bucket(double deviation) {
  // Compare in hundredths so that 0.1 - 0.6 lands on the boundary exactly.
  long long d = std::llround(deviation * 100.0);
  if (d >= 50) return "far above";
  if (d > 25) return "above";
  if (d <= -50) return "far below";
  if (d < -25) return "below";
  return "near";
}

}  // namespace

std::string describe(const ExplanationItem& item) {
  const auto& info = feature_info(item.feature_id);
  char numbers[96];
  std::snprintf(numbers, sizeof(numbers), "(%.2f vs %.2f)", item.value,
                item.reference);
  std::string text(info.name);
  text += " (";
  text += statistic_name(item.stat);
  text += ") is ";
  text += bucket(item.deviation);
  text += item.counter() ? " the typical population level "
                         : " the user's typical level ";
  text += numbers;
  return text;
}

std::vector<TrajectoryPoint> trajectory(
    const std::string& user_id, std::optional<std::chrono::seconds> window,
    const std::vector<PredictionRecord>& records, Timestamp now) {
  std::vector<TrajectoryPoint> points;
  for (const auto& r : records) {
    if (r.user_id != user_id) continue;
    if (window && (r.timestamp < now - *window || r.timestamp > now)) continue;
    points.push_back({r.timestamp, r.probabilities.present, r.session_id});
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const TrajectoryPoint& a, const TrajectoryPoint& b) {
                     return a.timestamp < b.timestamp;
                   });
  return points;
}

AccumulatedConfidence accumulated_confidence(
    const std::string& user_id, const std::vector<PredictionRecord>& records) {
  AccumulatedConfidence out;
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.user_id != user_id) continue;
    sum += r.probabilities.present;
    out.current = r.probabilities.present;
    ++n;
  }
  if (n == 0) throw Error("no predictions for user " + user_id);
  out.mean = sum / static_cast<double>(n);
  return out;
}

nlohmann::json explanation_payload(
    const std::vector<ExplanationItem>& items,
    const std::vector<TrajectoryPoint>& points,
    const std::optional<AccumulatedConfidence>& accumulated) {
  nlohmann::json j;
  j["items"] = nlohmann::json::array();
  for (const auto& item : items) {
    j["items"].push_back({{"slot", item.slot},
                          {"statistic", statistic_name(item.stat)},
                          {"feature", feature_info(item.feature_id).name},
                          {"value", item.value},
                          {"display_value", item.display_value},
                          {"reference", item.reference},
                          {"color", color_name(item.color)},
                          {"description", item.description}});
  }
  j["trajectory"] = nlohmann::json::array();
  for (const auto& p : points) {
    j["trajectory"].push_back({{"t", to_epoch_seconds(p.timestamp)},
                               {"p", p.present_probability},
                               {"session_id", p.session_id}});
  }
  if (accumulated) {
    j["accumulated"] = {{"mean", accumulated->mean},
                        {"current", accumulated->current}};
  } else {
    j["accumulated"] = nullptr;
  }
  return j;
}

}  // namespace cogstream
