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

#include "cogstream/learners/gnb.h"

#include <cmath>
#include <limits>

namespace cogstream::learners {

ClassProbabilities naive_bayes_posterior(
    const std::array<double, 2>& class_weight,
    const std::array<std::map<std::string, GaussianEstimator>, 2>& estimators,
    const NamedVector& x) {
  const double total = class_weight[0] + class_weight[1];
  if (!(total > 0.0)) return {};
  std::array<double, 2> log_joint{};
  for (std::size_t c = 0; c < 2; ++c) {
    if (!(class_weight[c] > 0.0)) {
      log_joint[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lj = std::log(class_weight[c] / total);
    for (const auto& [slot, value] : x) {
      const auto it = estimators[c].find(slot);
      if (it == estimators[c].end()) continue;
      lj += it->second.log_pdf(value);
    }
    log_joint[c] = lj;
  }
  const double top = std::max(log_joint[0], log_joint[1]);
  const double e0 = std::exp(log_joint[0] - top);
  const double e1 = std::exp(log_joint[1] - top);
  ClassProbabilities p;
  p.absent = e0 / (e0 + e1);
  p.present = e1 / (e0 + e1);
  return p;
}

void GaussianNaiveBayes::learn_one(const NamedVector& x, Label y,
                                   double weight) {
  if (!(weight > 0.0)) return;
  const std::size_t c = index(y);
  class_weight_[c] += weight;
  for (const auto& [slot, value] : x) estimators_[c][slot].update(value, weight);
}

ClassProbabilities GaussianNaiveBayes::predict_proba(const NamedVector& x) const {
  return naive_bayes_posterior(class_weight_, estimators_, x);
}

const GaussianEstimator* GaussianNaiveBayes::estimator(
    Label y, const std::string& slot) const {
  const auto& m = estimators_[index(y)];
  const auto it = m.find(slot);
  return it == m.end() ? nullptr : &it->second;
}

nlohmann::json GaussianNaiveBayes::state_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < 2; ++c) {
    nlohmann::json est = nlohmann::json::object();
    for (const auto& [slot, g] : estimators_[c]) est[slot] = g.to_json();
    classes.push_back({{"weight", class_weight_[c]}, {"estimators", std::move(est)}});
  }
  return {{"classes", std::move(classes)}};
}

std::unique_ptr<GaussianNaiveBayes> GaussianNaiveBayes::restore(
    const nlohmann::json& state) {
  auto model = std::make_unique<GaussianNaiveBayes>();
  const auto& classes = state.at("classes");
  for (std::size_t c = 0; c < 2; ++c) {
    model->class_weight_[c] = classes.at(c).at("weight").get<double>();
    for (const auto& [slot, g] : classes.at(c).at("estimators").items()) {
      model->estimators_[c].emplace(slot, GaussianEstimator::from_json(g));
    }
  }
  return model;
}

}  // namespace cogstream::learners
