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

#ifndef COGSTREAM_LEARNERS_GNB_H_
#define COGSTREAM_LEARNERS_GNB_H_

#include <array>
#include <map>
#include <string>

#include "cogstream/learners/classifier.h"
#include "cogstream/learners/gaussian.h"

namespace cogstream::learners {

// Gaussian Naive Bayes with per-class, per-slot weighted Welford estimators.
class GaussianNaiveBayes : public Classifier {
 public:
  std::string_view kind() const override { return "gnb"; }

  void learn_one(const NamedVector& x, Label y, double weight = 1.0) override;
  ClassProbabilities predict_proba(const NamedVector& x) const override;
  std::unique_ptr<Classifier> clone() const override {
    return std::make_unique<GaussianNaiveBayes>(*this);
  }

  double class_weight(Label y) const { return class_weight_[index(y)]; }
  const GaussianEstimator* estimator(Label y, const std::string& slot) const;

  static std::unique_ptr<GaussianNaiveBayes> restore(const nlohmann::json& state);

 protected:
  nlohmann::json params_json() const override { return nlohmann::json::object(); }
  nlohmann::json state_json() const override;

 private:
  static std::size_t index(Label y) { return y == Label::kPresent ? 1 : 0; }

  std::array<double, 2> class_weight_{};
  std::array<std::map<std::string, GaussianEstimator>, 2> estimators_;
};

// Shared with the tree leaves: Naive Bayes posterior from class weights and
// per-class slot estimators. Returns (0.5, 0.5) when no weight was seen.
ClassProbabilities naive_bayes_posterior(
    const std::array<double, 2>& class_weight,
    const std::array<std::map<std::string, GaussianEstimator>, 2>& estimators,
    const NamedVector& x);

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_GNB_H_
