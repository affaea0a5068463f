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

#ifndef COGSTREAM_LEARNERS_ALMA_H_
#define COGSTREAM_LEARNERS_ALMA_H_

#include <string>

#include "cogstream/learners/classifier.h"

namespace cogstream::learners {

struct AlmaParams {
  double alpha = 0.5;
  double b = 1.0;
  double c = 1.0;
};

// Approximate Large Margin Algorithm with p = 2. Inputs are L2-normalized;
// labels map present -> +1, absent -> -1. The weight vector is projected back
// onto the unit ball after every update. Importance weights only gate
// learning (weight <= 0 skips the sample).
class Alma : public Classifier {
 public:
  explicit Alma(AlmaParams params = {}) : params_(params) {}

  std::string_view kind() const override { return "alma"; }

  void learn_one(const NamedVector& x, Label y, double weight = 1.0) override;
  ClassProbabilities predict_proba(const NamedVector& x) const override;
  std::unique_ptr<Classifier> clone() const override {
    return std::make_unique<Alma>(*this);
  }

  const NamedVector& weights() const { return w_; }
  double weight_norm() const;
  std::int64_t k() const { return k_; }
  const AlmaParams& params() const { return params_; }

  static std::unique_ptr<Alma> restore(const nlohmann::json& params,
                                       const nlohmann::json& state);

 protected:
  nlohmann::json params_json() const override;
  nlohmann::json state_json() const override;

 private:
  double dot_normalized(const NamedVector& x) const;

  AlmaParams params_;
  NamedVector w_;
  std::int64_t k_ = 1;
};

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_ALMA_H_
