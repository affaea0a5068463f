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

#include "cogstream/features.h"

#include <algorithm>
#include <charconv>

namespace cogstream {
namespace {

constexpr std::array<std::string_view, kNumStatistics> kStatNames = {
    "current", "avg", "q1", "q2", "q3"};

std::array<std::string, kNumExpandedSlots> make_slot_names() {
  std::array<std::string, kNumExpandedSlots> names;
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    for (int s = 0; s < kNumStatistics; ++s) {
      names[static_cast<std::size_t>(slot_index(f, Statistic(s)))] =
          slot_name(f, Statistic(s));
    }
  }
  return names;
}

void check_feature(int feature_id) {
  if (feature_id < 1 || feature_id > kNumBaseFeatures) {
    throw Error("feature id out of range: " + std::to_string(feature_id));
  }
}

}  // namespace

std::string_view statistic_name(Statistic stat) {
  return kStatNames[static_cast<std::size_t>(stat)];
}

std::string slot_name(int feature_id, Statistic stat) {
  return "f" + std::to_string(feature_id) + "." +
         std::string(statistic_name(stat));
}

std::optional<SlotRef> parse_slot_name(std::string_view name) {
  if (name.size() < 3 || name[0] != 'f') return std::nullopt;
  const auto dot = name.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  int id = 0;
  const auto digits = name.substr(1, dot - 1);
  if (digits.empty() || digits[0] == '0') return std::nullopt;
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    return std::nullopt;
  }
  if (id < 1 || id > kNumBaseFeatures) return std::nullopt;
  const auto stat = name.substr(dot + 1);
  for (int s = 0; s < kNumStatistics; ++s) {
    if (kStatNames[static_cast<std::size_t>(s)] == stat) {
      return SlotRef{id, Statistic(s)};
    }
  }
  return std::nullopt;
}

const std::array<std::string, kNumExpandedSlots>& slot_names() {
  static const auto names = make_slot_names();
  return names;
}

std::size_t nearest_rank_index(int q, std::size_t n) {
  if (n == 0) throw Error("empty history");
  // floor(q*n/4 + 1/2) in exact integer arithmetic.
  const std::size_t idx = (static_cast<std::size_t>(q) * n + 2) / 4;
  return std::min(idx, n - 1);
}

void UserHistory::append(const BaseFeatureVector& v) {
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    const auto i = static_cast<std::size_t>(f - 1);
    const double x = v.at(f);
    series_[i].push_back(x);
    sorted_[i].insert(
        std::upper_bound(sorted_[i].begin(), sorted_[i].end(), x), x);
    sums_[i] += x;
  }
}

const std::vector<double>& UserHistory::series(int feature_id) const {
  check_feature(feature_id);
  return series_[static_cast<std::size_t>(feature_id - 1)];
}

double UserHistory::running_average(int feature_id) const {
  check_feature(feature_id);
  if (empty()) throw Error("empty history");
  const auto i = static_cast<std::size_t>(feature_id - 1);
  return sums_[i] / static_cast<double>(series_[i].size());
}

double UserHistory::quartile(int feature_id, int q) const {
  check_feature(feature_id);
  if (q < 1 || q > 3) throw Error("quartile must be 1, 2 or 3");
  if (empty()) throw Error("empty history");
  const auto& sorted = sorted_[static_cast<std::size_t>(feature_id - 1)];
  return sorted[nearest_rank_index(q, sorted.size())];
}

nlohmann::json UserHistory::to_json() const {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : series_) series.push_back(s);
  return {{"user_id", user_id_}, {"series", std::move(series)}};
}

UserHistory UserHistory::from_json(const nlohmann::json& j) {
  UserHistory h(j.at("user_id").get<std::string>());
  const auto& series = j.at("series");
  if (series.size() != kNumBaseFeatures) throw Error("history needs 22 series");
  const std::size_t n = series[0].size();
  for (std::size_t k = 0; k < n; ++k) {
    BaseFeatureVector v;
    for (int f = 1; f <= kNumBaseFeatures; ++f) {
      v.set(f, series[static_cast<std::size_t>(f - 1)].at(k).get<double>());
    }
    h.append(v);
  }
  return h;
}

double ExpandedFeatureVector::at(std::string_view name) const {
  const auto ref = parse_slot_name(name);
  if (!ref) throw Error("unknown slot '" + std::string(name) + "'");
  return at(ref->feature_id, ref->stat);
}

NamedVector ExpandedFeatureVector::to_named() const {
  NamedVector out;
  const auto& names = slot_names();
  for (int i = 0; i < kNumExpandedSlots; ++i) {
    out.emplace(names[static_cast<std::size_t>(i)], values_[static_cast<std::size_t>(i)]);
  }
  return out;
}

ExpandedFeatureVector expand(const UserHistory& history,
                             const BaseFeatureVector& current) {
  if (history.empty()) throw Error("empty history");
  ExpandedFeatureVector x;
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    x.set(f, Statistic::kCurrent, current.at(f));
    x.set(f, Statistic::kAvg, history.running_average(f));
    x.set(f, Statistic::kQ1, history.quartile(f, 1));
    x.set(f, Statistic::kQ2, history.quartile(f, 2));
    x.set(f, Statistic::kQ3, history.quartile(f, 3));
  }
  return x;
}

void PopulationStats::update(const BaseFeatureVector& v) {
  ++count_;
  const double n = static_cast<double>(count_);
  auto advance = [&](Counter& c, double x) {
    c.mean += (x - c.mean) / n;
    if (count_ == 1) {
      c.min = c.max = x;
    } else {
      c.min = std::min(c.min, x);
      c.max = std::max(c.max, x);
    }
  };
  advance(interactions_, v.at(kInteractionsFeature));
  advance(words_, v.at(kWordsFeature));
}

const PopulationStats::Counter& PopulationStats::counter(int feature_id) const {
  if (feature_id == kInteractionsFeature) return interactions_;
  if (feature_id == kWordsFeature) return words_;
  throw Error("population stats track only the counter features");
}

double PopulationStats::mean(int feature_id) const {
  return counter(feature_id).mean;
}
double PopulationStats::min(int feature_id) const {
  return counter(feature_id).min;
}
double PopulationStats::max(int feature_id) const {
  return counter(feature_id).max;
}

nlohmann::json PopulationStats::to_json() const {
  auto dump = [](const Counter& c) {
    return nlohmann::json{{"mean", c.mean}, {"min", c.min}, {"max", c.max}};
  };
  return {{"count", count_},
          {"interactions", dump(interactions_)},
          {"words", dump(words_)}};
}

PopulationStats PopulationStats::from_json(const nlohmann::json& j) {
  auto load = [](const nlohmann::json& c) {
    return Counter{c.at("mean").get<double>(), c.at("min").get<double>(),
                   c.at("max").get<double>()};
  };
  PopulationStats s;
  s.count_ = j.at("count").get<std::int64_t>();
  s.interactions_ = load(j.at("interactions"));
  s.words_ = load(j.at("words"));
  return s;
}

}  // namespace cogstream
