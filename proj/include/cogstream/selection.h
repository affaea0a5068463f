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

#ifndef COGSTREAM_SELECTION_H_
#define COGSTREAM_SELECTION_H_

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogstream/common.h"
#include "cogstream/features.h"
#include "json.hpp"

namespace cogstream {

// Subset of the 110 expanded slot names admitted to the classifier.
class SelectionMask {
 public:
  SelectionMask() = default;
  explicit SelectionMask(std::set<std::string> slots)
      : slots_(std::move(slots)) {}

  static SelectionMask full();
  static SelectionMask from_flags(const std::array<bool, kNumExpandedSlots>& on);

  const std::set<std::string>& slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  bool contains(const std::string& slot) const { return slots_.count(slot) > 0; }

  friend bool operator==(const SelectionMask&, const SelectionMask&) = default;

 private:
  std::set<std::string> slots_;
};

// Projects x onto the mask. Throws Error("unknown slot ...") for mask names
// that are not expanded slots, and for an empty mask.
NamedVector apply_mask(const ExpandedFeatureVector& x, const SelectionMask& mask);

// Streaming Pearson correlation of every slot against a 0/1 target, kept as
// Welford co-moments.
class CorrelationState {
 public:
  void update(const ExpandedFeatureVector& x, int y);

  std::int64_t count() const { return count_; }
  // 0 when either variable has zero variance so far.
  double pearson(int slot) const;

  nlohmann::json to_json() const;
  static CorrelationState from_json(const nlohmann::json& j);

 private:
  std::int64_t count_ = 0;
  double mean_y_ = 0.0;
  double m2_y_ = 0.0;
  std::array<double, kNumExpandedSlots> mean_x_{};
  std::array<double, kNumExpandedSlots> m2_x_{};
  std::array<double, kNumExpandedSlots> co_xy_{};
};

// The k slots with the largest |r|; ties by slot name. k is capped at 110.
SelectionMask select_k_best(const CorrelationState& state, int k);

// Per-slot running population variance (Welford).
class VarianceState {
 public:
  void update(const ExpandedFeatureVector& x);

  std::int64_t count() const { return count_; }
  double variance(int slot) const;

  nlohmann::json to_json() const;
  static VarianceState from_json(const nlohmann::json& j);

 private:
  std::int64_t count_ = 0;
  std::array<double, kNumExpandedSlots> mean_{};
  std::array<double, kNumExpandedSlots> m2_{};
};

// Nearest-rank percentile (0 < p <= 100) of a non-empty sample.
double nearest_rank_percentile(std::vector<double> values, double percentile);

// Threshold = the percentile of per-slot population variances over the
// warm-up block. Needs at least two vectors.
double variance_cold_start(const std::vector<ExpandedFeatureVector>& warmup,
                           double percentile = 10.0);

// Slots whose running variance exceeds the threshold; falls back to the full
// mask when nothing qualifies.
SelectionMask select_by_variance(const VarianceState& state, double threshold);

enum class SelectorMode { kCorrelation, kVariance };

std::string_view selector_mode_name(SelectorMode mode);
SelectorMode parse_selector_mode(std::string_view text);

struct SelectorConfig {
  SelectorMode mode = SelectorMode::kVariance;
  // Variance mode: fixed cut-off replacing the cold-start percentile.
  // Correlation mode: the |r| cut that sizes K (default 0.2).
  std::optional<double> threshold;
  // Expected stream length; warm-up lengths are fractions of it.
  std::size_t horizon = 601;
  double variance_warmup_fraction = 0.2;
  double variance_percentile = 10.0;
  double correlation_warmup_fraction = 0.8;
  int correlation_min_k = 5;
};

// Stateful selector driven by the evaluation loop. observe() sees every
// sample's features before prediction; observe_label() sees the label only
// after the prediction has been made.
class FeatureSelector {
 public:
  explicit FeatureSelector(SelectorConfig config = {});

  void observe(const ExpandedFeatureVector& x);
  void observe_label(const ExpandedFeatureVector& x, Label y);
  SelectionMask mask() const;

  const SelectorConfig& config() const { return config_; }
  bool warmed_up() const;
  std::optional<double> variance_threshold() const { return variance_threshold_; }
  std::optional<int> frozen_k() const { return frozen_k_; }
  const CorrelationState& correlation() const { return correlation_; }
  const VarianceState& variance() const { return variance_; }

  nlohmann::json to_json() const;
  static FeatureSelector from_json(const nlohmann::json& j);

 private:
  std::size_t warmup_length(double fraction) const;

  SelectorConfig config_;
  CorrelationState correlation_;
  VarianceState variance_;
  std::vector<ExpandedFeatureVector> warmup_;
  std::optional<double> variance_threshold_;
  std::optional<int> frozen_k_;
};

}  // namespace cogstream

#endif  // COGSTREAM_SELECTION_H_
