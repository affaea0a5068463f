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

#ifndef COGSTREAM_FEATURES_H_
#define COGSTREAM_FEATURES_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogstream/common.h"
#include "cogstream/extraction.h"
#include "json.hpp"

namespace cogstream {

// The five history summaries kept per base feature.
enum class Statistic { kCurrent = 0, kAvg = 1, kQ1 = 2, kQ2 = 3, kQ3 = 4 };

inline constexpr int kNumStatistics = 5;
inline constexpr int kNumExpandedSlots = kNumBaseFeatures * kNumStatistics;

std::string_view statistic_name(Statistic stat);

struct SlotRef {
  int feature_id;  // 1..22
  Statistic stat;
};

// Slot names look like "f6.q3" or "f10.current".
std::string slot_name(int feature_id, Statistic stat);
std::optional<SlotRef> parse_slot_name(std::string_view name);
inline int slot_index(int feature_id, Statistic stat) {
  return (feature_id - 1) * kNumStatistics + static_cast<int>(stat);
}
const std::array<std::string, kNumExpandedSlots>& slot_names();

// round_half_up(q * n / 4) clamped into [0, n-1].
std::size_t nearest_rank_index(int q, std::size_t n);

// Append-only per-user history of base feature values.
class UserHistory {
 public:
  UserHistory() = default;
  explicit UserHistory(std::string user_id) : user_id_(std::move(user_id)) {}

  void append(const BaseFeatureVector& v);

  const std::string& user_id() const { return user_id_; }
  std::size_t size() const { return series_[0].size(); }
  bool empty() const { return size() == 0; }

  // Observations of one feature in arrival order.
  const std::vector<double>& series(int feature_id) const;

  double running_average(int feature_id) const;
  double quartile(int feature_id, int q) const;

  nlohmann::json to_json() const;
  static UserHistory from_json(const nlohmann::json& j);

 private:
  std::string user_id_;
  std::array<std::vector<double>, kNumBaseFeatures> series_;
  std::array<std::vector<double>, kNumBaseFeatures> sorted_;
  std::array<double, kNumBaseFeatures> sums_{};
};

class ExpandedFeatureVector {
 public:
  ExpandedFeatureVector() { values_.fill(0.0); }

  double at(int index) const { return values_.at(static_cast<std::size_t>(index)); }
  double at(int feature_id, Statistic stat) const {
    return at(slot_index(feature_id, stat));
  }
  void set(int feature_id, Statistic stat, double value) {
    values_.at(static_cast<std::size_t>(slot_index(feature_id, stat))) = value;
  }
  // Throws Error("unknown slot ...") for names outside the 110 slots.
  double at(std::string_view name) const;

  static constexpr int size() { return kNumExpandedSlots; }
  const std::array<double, kNumExpandedSlots>& values() const { return values_; }

  NamedVector to_named() const;

 private:
  std::array<double, kNumExpandedSlots> values_;
};

// `history` must already contain `current` as its latest observation.
ExpandedFeatureVector expand(const UserHistory& history,
                             const BaseFeatureVector& current);

// Running means of the two counter features over every closed session of
// every user, plus their observed range (used to normalize counters for
// display).
class PopulationStats {
 public:
  void update(const BaseFeatureVector& v);

  std::int64_t count() const { return count_; }
  double mean(int feature_id) const;
  double min(int feature_id) const;
  double max(int feature_id) const;

  nlohmann::json to_json() const;
  static PopulationStats from_json(const nlohmann::json& j);

 private:
  struct Counter {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
  };
  const Counter& counter(int feature_id) const;

  std::int64_t count_ = 0;
  Counter interactions_;
  Counter words_;
};

}  // namespace cogstream

#endif  // COGSTREAM_FEATURES_H_
