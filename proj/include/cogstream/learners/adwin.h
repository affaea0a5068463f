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

#ifndef COGSTREAM_LEARNERS_ADWIN_H_
#define COGSTREAM_LEARNERS_ADWIN_H_

#include <cstdint>
#include <deque>
#include <vector>

#include "json.hpp"

namespace cogstream::learners {

// Adaptive windowing change detector over a stream of values in [0,1].
// Keeps an exponential histogram of buckets; every `clock` insertions it
// tests all bucket-boundary cuts and drops the stale prefix while two
// sub-windows have significantly different means.
class Adwin {
 public:
  explicit Adwin(double delta = 0.002) : delta_(delta) {}

  // Returns true when a change was detected by this insertion.
  bool update(double value);

  double estimation() const {
    return width_ > 0 ? total_ / static_cast<double>(width_) : 0.0;
  }
  std::int64_t width() const { return width_; }
  std::int64_t dropped() const { return dropped_; }
  std::int64_t inserted() const { return inserted_; }
  double delta() const { return delta_; }

  nlohmann::json to_json() const;
  static Adwin from_json(const nlohmann::json& j);

 private:
  struct Bucket {
    double total = 0.0;
    double variance = 0.0;
  };

  void insert(double value);
  void compress();
  void drop_oldest();
  bool cut_detected(double n0, double n1, double u0, double u1) const;
  bool detect_change();

  static constexpr int kMaxBuckets = 5;
  static constexpr int kClock = 32;
  static constexpr int kMinWindowLength = 5;
  static constexpr int kGracePeriod = 10;

  double delta_;
  // rows_[i] holds buckets of 2^i elements, oldest first.
  std::vector<std::deque<Bucket>> rows_;
  std::int64_t width_ = 0;
  double total_ = 0.0;
  double variance_ = 0.0;
  std::int64_t tick_ = 0;
  std::int64_t inserted_ = 0;
  std::int64_t dropped_ = 0;
};

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_ADWIN_H_
