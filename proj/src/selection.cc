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

#include "cogstream/selection.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cogstream {
namespace {

template <std::size_t N>
nlohmann::json array_json(const std::array<double, N>& a) {
  return nlohmann::json(std::vector<double>(a.begin(), a.end()));
}

template <std::size_t N>
std::array<double, N> array_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != N) throw Error("state array has the wrong length");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

SelectionMask SelectionMask::full() {
  const auto& names = slot_names();
  return SelectionMask(std::set<std::string>(names.begin(), names.end()));
}

SelectionMask SelectionMask::from_flags(
    const std::array<bool, kNumExpandedSlots>& on) {
  std::set<std::string> slots;
  const auto& names = slot_names();
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (on[i]) slots.insert(names[i]);
  }
  return SelectionMask(std::move(slots));
}

NamedVector apply_mask(const ExpandedFeatureVector& x,
                       const SelectionMask& mask) {
  if (mask.empty()) throw Error("empty selection mask");
  NamedVector out;
  for (const auto& slot : mask.slots()) out.emplace(slot, x.at(slot));
  return out;
}

void CorrelationState::update(const ExpandedFeatureVector& x, int y) {
  ++count_;
  const double n = static_cast<double>(count_);
  const double dy = static_cast<double>(y) - mean_y_;
  mean_y_ += dy / n;
  const double dy_after = static_cast<double>(y) - mean_y_;
  m2_y_ += dy * dy_after;
  for (std::size_t i = 0; i < kNumExpandedSlots; ++i) {
    const double xi = x.values()[i];
    const double dx = xi - mean_x_[i];
    mean_x_[i] += dx / n;
    m2_x_[i] += dx * (xi - mean_x_[i]);
    co_xy_[i] += dx * dy_after;
  }
}

double CorrelationState::pearson(int slot) const {
  const auto i = static_cast<std::size_t>(slot);
  const double denom = m2_x_.at(i) * m2_y_;
  if (count_ < 2 || !(m2_x_[i] > 0.0) || !(m2_y_ > 0.0) || !(denom > 0.0)) {
    return 0.0;
  }
  return std::clamp(co_xy_[i] / std::sqrt(denom), -1.0, 1.0);
}

nlohmann::json CorrelationState::to_json() const {
  return {{"count", count_},      {"mean_y", mean_y_},
          {"m2_y", m2_y_},        {"mean_x", array_json(mean_x_)},
          {"m2_x", array_json(m2_x_)}, {"co_xy", array_json(co_xy_)}};
}

CorrelationState CorrelationState::from_json(const nlohmann::json& j) {
  CorrelationState s;
  s.count_ = j.at("count").get<std::int64_t>();
  s.mean_y_ = j.at("mean_y").get<double>();
  s.m2_y_ = j.at("m2_y").get<double>();
  s.mean_x_ = array_from<kNumExpandedSlots>(j.at("mean_x"));
  s.m2_x_ = array_from<kNumExpandedSlots>(j.at("m2_x"));
  s.co_xy_ = array_from<kNumExpandedSlots>(j.at("co_xy"));
  return s;
}

SelectionMask select_k_best(const CorrelationState& state, int k) {
  if (k < 1) throw Error("k must be positive");
  if (state.count() < 2) throw Error("k-best selection needs two samples");
  const auto& names = slot_names();
  std::vector<int> order(kNumExpandedSlots);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> strength(kNumExpandedSlots);
  for (int i = 0; i < kNumExpandedSlots; ++i) {
    strength[static_cast<std::size_t>(i)] = std::abs(state.pearson(i));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = strength[static_cast<std::size_t>(a)];
    const double sb = strength[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return names[static_cast<std::size_t>(a)] < names[static_cast<std::size_t>(b)];
  });
  const int take = std::min(k, kNumExpandedSlots);
  std::set<std::string> slots;
  for (int i = 0; i < take; ++i) {
    slots.insert(names[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  }
  return SelectionMask(std::move(slots));
}

void VarianceState::update(const ExpandedFeatureVector& x) {
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < kNumExpandedSlots; ++i) {
    const double xi = x.values()[i];
    const double d = xi - mean_[i];
    mean_[i] += d / n;
    m2_[i] += d * (xi - mean_[i]);
  }
}

double VarianceState::variance(int slot) const {
  if (count_ == 0) return 0.0;
  return std::max(0.0, m2_.at(static_cast<std::size_t>(slot))) /
         static_cast<double>(count_);
}

nlohmann::json VarianceState::to_json() const {
  return {{"count", count_}, {"mean", array_json(mean_)}, {"m2", array_json(m2_)}};
}

VarianceState VarianceState::from_json(const nlohmann::json& j) {
  VarianceState s;
  s.count_ = j.at("count").get<std::int64_t>();
  s.mean_ = array_from<kNumExpandedSlots>(j.at("mean"));
  s.m2_ = array_from<kNumExpandedSlots>(j.at("m2"));
  return s;
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw Error("percentile of an empty sample");
  if (!(percentile > 0.0) || percentile > 100.0) {
    throw Error("percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double rank =
      std::ceil(percentile / 100.0 * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return values[std::min(idx, values.size() - 1)];
}

double variance_cold_start(const std::vector<ExpandedFeatureVector>& warmup,
                           double percentile) {
  if (warmup.size() < 2) throw Error("cold start needs at least two samples");
  const double n = static_cast<double>(warmup.size());
  std::vector<double> variances;
  variances.reserve(kNumExpandedSlots);
  for (int slot = 0; slot < kNumExpandedSlots; ++slot) {
    double mean = 0.0;
    for (const auto& x : warmup) mean += x.at(slot);
    mean /= n;
    double ss = 0.0;
    for (const auto& x : warmup) {
      const double d = x.at(slot) - mean;
      ss += d * d;
    }
    variances.push_back(ss / n);
  }
  return nearest_rank_percentile(std::move(variances), percentile);
}

SelectionMask select_by_variance(const VarianceState& state, double threshold) {
  std::array<bool, kNumExpandedSlots> on{};
  bool any = false;
  for (int slot = 0; slot < kNumExpandedSlots; ++slot) {
    on[static_cast<std::size_t>(slot)] = state.variance(slot) > threshold;
    any = any || on[static_cast<std::size_t>(slot)];
  }
  return any ? SelectionMask::from_flags(on) : SelectionMask::full();
}

std::string_view selector_mode_name(SelectorMode mode) {
  return mode == SelectorMode::kCorrelation ? "correlation" : "variance";
}

SelectorMode parse_selector_mode(std::string_view text) {
  if (text == "correlation") return SelectorMode::kCorrelation;
  if (text == "variance") return SelectorMode::kVariance;
  throw Error("unknown selector mode '" + std::string(text) + "'");
}

FeatureSelector::FeatureSelector(SelectorConfig config) : config_(config) {
  if (config_.mode == SelectorMode::kVariance && config_.threshold) {
    variance_threshold_ = *config_.threshold;
  }
}

std::size_t FeatureSelector::warmup_length(double fraction) const {
  const double len = std::ceil(fraction * static_cast<double>(config_.horizon));
  return std::max<std::size_t>(2, static_cast<std::size_t>(len));
}

bool FeatureSelector::warmed_up() const {
  return config_.mode == SelectorMode::kVariance ? variance_threshold_.has_value()
                                                 : frozen_k_.has_value();
}

void FeatureSelector::observe(const ExpandedFeatureVector& x) {
  if (config_.mode != SelectorMode::kVariance) return;
  variance_.update(x);
  if (variance_threshold_) return;
  warmup_.push_back(x);
  if (warmup_.size() >= warmup_length(config_.variance_warmup_fraction)) {
    // The running state has seen exactly the warm-up block here, so the
    // threshold and later comparisons share one variance estimate.
    std::vector<double> variances;
    variances.reserve(kNumExpandedSlots);
    for (int slot = 0; slot < kNumExpandedSlots; ++slot) {
      variances.push_back(variance_.variance(slot));
    }
    variance_threshold_ =
        nearest_rank_percentile(std::move(variances), config_.variance_percentile);
    warmup_.clear();
    warmup_.shrink_to_fit();
  }
}

void FeatureSelector::observe_label(const ExpandedFeatureVector& x, Label y) {
  if (config_.mode != SelectorMode::kCorrelation) return;
  correlation_.update(x, y == Label::kPresent ? 1 : 0);
  if (frozen_k_) return;
  if (static_cast<std::size_t>(correlation_.count()) >=
      warmup_length(config_.correlation_warmup_fraction)) {
    const double cut = config_.threshold.value_or(0.2);
    int k = 0;
    for (int slot = 0; slot < kNumExpandedSlots; ++slot) {
      if (std::abs(correlation_.pearson(slot)) > cut) ++k;
    }
    frozen_k_ = std::max(k, config_.correlation_min_k);
  }
}

SelectionMask FeatureSelector::mask() const {
  if (config_.mode == SelectorMode::kVariance) {
    return variance_threshold_ ? select_by_variance(variance_, *variance_threshold_)
                               : SelectionMask::full();
  }
  return frozen_k_ ? select_k_best(correlation_, *frozen_k_)
                   : SelectionMask::full();
}

nlohmann::json FeatureSelector::to_json() const {
  nlohmann::json warmup = nlohmann::json::array();
  for (const auto& x : warmup_) warmup.push_back(array_json(x.values()));
  nlohmann::json j = {
      {"mode", selector_mode_name(config_.mode)},
      {"horizon", config_.horizon},
      {"variance_warmup_fraction", config_.variance_warmup_fraction},
      {"variance_percentile", config_.variance_percentile},
      {"correlation_warmup_fraction", config_.correlation_warmup_fraction},
      {"correlation_min_k", config_.correlation_min_k},
      {"correlation", correlation_.to_json()},
      {"variance", variance_.to_json()},
      {"warmup", std::move(warmup)},
  };
  j["threshold"] = config_.threshold ? nlohmann::json(*config_.threshold)
                                     : nlohmann::json(nullptr);
  j["variance_threshold"] = variance_threshold_
                                ? nlohmann::json(*variance_threshold_)
                                : nlohmann::json(nullptr);
  j["frozen_k"] = frozen_k_ ? nlohmann::json(*frozen_k_) : nlohmann::json(nullptr);
  return j;
}

FeatureSelector FeatureSelector::from_json(const nlohmann::json& j) {
  SelectorConfig config;
  config.mode = parse_selector_mode(j.at("mode").get<std::string>());
  if (!j.at("threshold").is_null()) config.threshold = j["threshold"].get<double>();
  config.horizon = j.at("horizon").get<std::size_t>();
  config.variance_warmup_fraction = j.at("variance_warmup_fraction").get<double>();
  config.variance_percentile = j.at("variance_percentile").get<double>();
  config.correlation_warmup_fraction =
      j.at("correlation_warmup_fraction").get<double>();
  config.correlation_min_k = j.at("correlation_min_k").get<int>();

  FeatureSelector s(config);
  s.correlation_ = CorrelationState::from_json(j.at("correlation"));
  s.variance_ = VarianceState::from_json(j.at("variance"));
  for (const auto& row : j.at("warmup")) {
    const auto values = array_from<kNumExpandedSlots>(row);
    ExpandedFeatureVector x;
    for (int i = 0; i < kNumExpandedSlots; ++i) {
      x.set(i / kNumStatistics + 1, Statistic(i % kNumStatistics),
            values[static_cast<std::size_t>(i)]);
    }
    s.warmup_.push_back(x);
  }
  s.variance_threshold_.reset();
  if (!j.at("variance_threshold").is_null()) {
    s.variance_threshold_ = j["variance_threshold"].get<double>();
  }
  if (!j.at("frozen_k").is_null()) s.frozen_k_ = j["frozen_k"].get<int>();
  return s;
}

}  // namespace cogstream
