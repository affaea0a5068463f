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

#ifndef COGSTREAM_LEARNERS_CLASSIFIER_H_
#define COGSTREAM_LEARNERS_CLASSIFIER_H_

#include <memory>
#include <string>
#include <string_view>

#include "cogstream/common.h"
#include "json.hpp"

namespace cogstream::learners {

inline constexpr int kCheckpointVersion = 1;

// Incremental binary classifier. learn_one and predict_proba may be called in
// any interleaving; an untrained model answers (0.5, 0.5) and so predicts
// 'absent'. Slots never seen before, or missing at prediction time, are
// tolerated by every implementation.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string_view kind() const = 0;

  // weight is an importance weight; 0 means "skip".
  virtual void learn_one(const NamedVector& x, Label y, double weight = 1.0) = 0;
  virtual ClassProbabilities predict_proba(const NamedVector& x) const = 0;

  Label predict(const NamedVector& x) const { return predict_proba(x).argmax(); }

  // Self-describing checkpoint: {"format", "version", "kind", "params", "state"}.
  nlohmann::json save() const;
  virtual std::unique_ptr<Classifier> clone() const = 0;

 protected:
  virtual nlohmann::json params_json() const = 0;
  virtual nlohmann::json state_json() const = 0;
};

std::unique_ptr<Classifier> load_classifier(const nlohmann::json& checkpoint);

// SHA-256 of the serialized checkpoint; changes iff the model state changes.
std::string checkpoint_hash(const Classifier& model);

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_CLASSIFIER_H_
