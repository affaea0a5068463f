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

#include "cogstream/learners/adwin.h"

#include <cmath>

#include "cogstream/common.h"
#include "cogstream/learners/gaussian.h"

namespace cogstream::learners {

double hoeffding_bound(double range, double delta, double n) {
  if (!(range > 0.0)) throw Error("hoeffding bound needs a positive range");
  if (!(delta > 0.0) || delta > 1.0) {
    throw Error("hoeffding bound needs 0 < delta <= 1");
  }
  if (!(n > 0.0)) throw Error("hoeffding bound needs n > 0");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

bool Adwin::update(double value) {
  insert(value);
  ++tick_;
  if (tick_ % kClock != 0 || width_ <= kGracePeriod) return false;
  return detect_change();
}

void Adwin::insert(double value) {
  ++inserted_;
  if (rows_.empty()) rows_.emplace_back();
  rows_[0].push_back(Bucket{value, 0.0});
  ++width_;
  if (width_ > 1) {
    const double n = static_cast<double>(width_);
    const double prev_mean = total_ / (n - 1.0);
    variance_ += (n - 1.0) * (value - prev_mean) * (value - prev_mean) / n;
  }
  total_ += value;
  compress();
}

void Adwin::compress() {
  for (std::size_t row = 0; row < rows_.size(); ++row) {
    if (rows_[row].size() <= static_cast<std::size_t>(kMaxBuckets)) break;
    const double size = std::ldexp(1.0, static_cast<int>(row));
    const Bucket a = rows_[row][0];
    const Bucket b = rows_[row][1];
    rows_[row].pop_front();
    rows_[row].pop_front();
    const double ua = a.total / size;
    const double ub = b.total / size;
    const double inc = size * size * (ua - ub) * (ua - ub) / (2.0 * size);
    if (row + 1 == rows_.size()) rows_.emplace_back();
    rows_[row + 1].push_back(Bucket{a.total + b.total, a.variance + b.variance + inc});
  }
}

void Adwin::drop_oldest() {
  // The oldest bucket sits at the front of the highest non-empty row.
  std::size_t row = rows_.size();
  while (row > 0 && rows_[row - 1].empty()) --row;
  if (row == 0) return;
  --row;
  const Bucket b = rows_[row].front();
  rows_[row].pop_front();
  const auto size = static_cast<std::int64_t>(1) << row;
  width_ -= size;
  dropped_ += size;
  total_ -= b.total;
  if (width_ > 0) {
    const double n1 = static_cast<double>(size);
    const double w = static_cast<double>(width_);
    const double u1 = b.total / n1;
    const double inc = b.variance + n1 * w * (u1 - total_ / w) * (u1 - total_ / w) / (n1 + w);
    variance_ = std::max(0.0, variance_ - inc);
  } else {
    total_ = 0.0;
    variance_ = 0.0;
  }
  while (!rows_.empty() && rows_.back().empty()) rows_.pop_back();
}

bool Adwin::cut_detected(double n0, double n1, double u0, double u1) const {
  const double n = static_cast<double>(width_);
  const double diff = std::abs(u0 / n0 - u1 / n1);
  const double v = variance_ / n;
  const double dd = std::log(2.0 * std::log(n) / delta_);
  const double m = 1.0 / (n0 - kMinWindowLength + 1.0) +
                   1.0 / (n1 - kMinWindowLength + 1.0);
  const double epsilon = std::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
  return diff > epsilon;
}

bool Adwin::detect_change() {
  bool changed = false;
  bool reduce = true;
  while (reduce) {
    reduce = false;
    double n0 = 0.0;
    double n1 = static_cast<double>(width_);
    double u0 = 0.0;
    double u1 = total_;
    // Walk buckets from oldest to newest.
    for (std::size_t r = rows_.size(); r-- > 0 && !reduce;) {
      const double size = std::ldexp(1.0, static_cast<int>(r));
      for (const Bucket& b : rows_[r]) {
        n0 += size;
        n1 -= size;
        u0 += b.total;
        u1 -= b.total;
        if (n1 < kMinWindowLength) break;
        if (n0 >= kMinWindowLength && cut_detected(n0, n1, u0, u1)) {
          reduce = true;
          changed = true;
          if (width_ > 0) drop_oldest();
          break;
        }
      }
    }
  }
  return changed;
}

nlohmann::json Adwin::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rows_) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& b : row) r.push_back({b.total, b.variance});
    rows.push_back(std::move(r));
  }
  return {{"delta", delta_},       {"rows", std::move(rows)},
          {"width", width_},       {"total", total_},
          {"variance", variance_}, {"tick", tick_},
          {"inserted", inserted_}, {"dropped", dropped_}};
}

Adwin Adwin::from_json(const nlohmann::json& j) {
  Adwin a(j.at("delta").get<double>());
  for (const auto& r : j.at("rows")) {
    std::deque<Bucket> row;
    for (const auto& b : r) row.push_back(Bucket{b.at(0).get<double>(), b.at(1).get<double>()});
    a.rows_.push_back(std::move(row));
  }
  a.width_ = j.at("width").get<std::int64_t>();
  a.total_ = j.at("total").get<double>();
  a.variance_ = j.at("variance").get<double>();
  a.tick_ = j.at("tick").get<std::int64_t>();
  a.inserted_ = j.at("inserted").get<std::int64_t>();
  a.dropped_ = j.at("dropped").get<std::int64_t>();
  return a;
}

}  // namespace cogstream::learners
