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

#ifndef COGSTREAM_LEARNERS_GAUSSIAN_H_
#define COGSTREAM_LEARNERS_GAUSSIAN_H_

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cogstream::learners {

inline constexpr double kVarianceFloor = 1e-9;

// Weighted running mean/variance (West's weighted Welford update) plus the
// observed range.
class GaussianEstimator {
 public:
  void update(double x, double w = 1.0) {
    if (!(w > 0.0)) return;
    if (weight_ == 0.0) {
      min_ = max_ = x;
    } else {
      min_ = std::min(min_, x);
      max_ = std::max(max_, x);
    }
    weight_ += w;
    const double delta = x - mean_;
    mean_ += (w / weight_) * delta;
    m2_ += w * delta * (x - mean_);
  }

  double weight() const { return weight_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double min() const { return min_; }
  double max() const { return max_; }

  // Unbiased (weight - 1) variance; 0 until more than one unit of weight.
  double variance() const {
    return weight_ > 1.0 ? std::max(0.0, m2_) / (weight_ - 1.0) : 0.0;
  }

  double log_pdf(double x) const {
    const double var = std::max(variance(), kVarianceFloor);
    const double d = x - mean_;
    return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
  }

  // Estimated weight at or below x.
  double weight_below(double x) const {
    if (weight_ == 0.0 || x < min_) return 0.0;
    if (x >= max_) return weight_;
    const double sd = std::sqrt(variance());
    if (sd == 0.0) return x < mean_ ? 0.0 : weight_;
    return weight_ * 0.5 * std::erfc(-(x - mean_) / (sd * M_SQRT2));
  }

  nlohmann::json to_json() const {
    return nlohmann::json::array({weight_, mean_, m2_, min_, max_});
  }
  static GaussianEstimator from_json(const nlohmann::json& j) {
    GaussianEstimator g;
    g.weight_ = j.at(0).get<double>();
    g.mean_ = j.at(1).get<double>();
    g.m2_ = j.at(2).get<double>();
    g.min_ = j.at(3).get<double>();
    g.max_ = j.at(4).get<double>();
    return g;
  }

 private:
  double weight_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

// epsilon = sqrt(R^2 ln(1/delta) / (2n)). Requires R > 0, 0 < delta <= 1,
// n > 0.
double hoeffding_bound(double range, double delta, double n);

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_GAUSSIAN_H_
