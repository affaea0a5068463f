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

#include "cogstream/learners/alma.h"

#include <cmath>

namespace cogstream::learners {
namespace {

double l2_norm(const NamedVector& v) {
  double ss = 0.0;
  for (const auto& [_, value] : v) ss += value * value;
  return std::sqrt(ss);
}

}  // namespace

double Alma::weight_norm() const { return l2_norm(w_); }

double Alma::dot_normalized(const NamedVector& x) const {
  const double norm = l2_norm(x);
  if (!(norm > 0.0)) return 0.0;
  double dot = 0.0;
  for (const auto& [slot, value] : x) {
    const auto it = w_.find(slot);
    if (it != w_.end()) dot += it->second * value;
  }
  return dot / norm;
}

void Alma::learn_one(const NamedVector& x, Label y, double weight) {
  if (!(weight > 0.0)) return;
  const double sign = y == Label::kPresent ? 1.0 : -1.0;
  const double kk = static_cast<double>(k_);
  // p = 2: gamma_k = B / sqrt(k), eta_k = C / sqrt(k).
  const double gamma = params_.b / std::sqrt(kk);
  const double margin = sign * dot_normalized(x);
  if (margin > (1.0 - params_.alpha) * gamma) return;

  const double norm = l2_norm(x);
  if (norm > 0.0) {
    const double eta = params_.c / std::sqrt(kk);
    for (const auto& [slot, value] : x) {
      w_[slot] += eta * sign * value / norm;
    }
    const double wn = l2_norm(w_);
    if (wn > 1.0) {
      for (auto& [_, value] : w_) value /= wn;
    }
  }
  ++k_;
}

ClassProbabilities Alma::predict_proba(const NamedVector& x) const {
  const double score = dot_normalized(x);
  ClassProbabilities p;
  p.present = 1.0 / (1.0 + std::exp(-score));
  p.absent = 1.0 - p.present;
  return p;
}

nlohmann::json Alma::params_json() const {
  return {{"alpha", params_.alpha}, {"B", params_.b}, {"C", params_.c}};
}

nlohmann::json Alma::state_json() const {
  return {{"w", w_}, {"k", k_}};
}

std::unique_ptr<Alma> Alma::restore(const nlohmann::json& params,
                                    const nlohmann::json& state) {
  AlmaParams p;
  p.alpha = params.at("alpha").get<double>();
  p.b = params.at("B").get<double>();
  p.c = params.at("C").get<double>();
  auto model = std::make_unique<Alma>(p);
  model->w_ = state.at("w").get<NamedVector>();
  model->k_ = state.at("k").get<std::int64_t>();
  return model;
}

}  // namespace cogstream::learners
