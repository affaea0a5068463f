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

#ifndef COGSTREAM_LEARNERS_ARFC_H_
#define COGSTREAM_LEARNERS_ARFC_H_

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cogstream/learners/adwin.h"
#include "cogstream/learners/classifier.h"
#include "cogstream/learners/hatc.h"

namespace cogstream::learners {

struct ArfcParams {
  int n_models = 10;
  // Per-split candidate subset: kSqrt, kFixed (max_features) or kAll.
  SubspaceMode features = SubspaceMode::kSqrt;
  int max_features = 5;
  double lambda = 6.0;
  double warning_delta = 0.01;
  double drift_delta = 0.001;
  // false: members vote with weights equal to their prequential accuracy.
  bool majority_vote = false;
  // Test hook: every member trains with weight 1 instead of Poisson(lambda).
  bool disable_poisson = false;
  HatcParams tree;
  std::uint64_t seed = 42;
};

nlohmann::json arfc_params_to_json(const ArfcParams& p);
ArfcParams arfc_params_from_json(const nlohmann::json& j);

// Adaptive Random Forest: online bagging of Hoeffding Adaptive Trees with
// random split subspaces. A member whose error rises past the warning
// detector starts a background tree; the drift detector swaps it in.
class AdaptiveRandomForest : public Classifier {
 public:
  explicit AdaptiveRandomForest(ArfcParams params = {});
  AdaptiveRandomForest(const AdaptiveRandomForest& other);
  AdaptiveRandomForest& operator=(const AdaptiveRandomForest&) = delete;

  std::string_view kind() const override { return "arfc"; }

  void learn_one(const NamedVector& x, Label y, double weight = 1.0) override;
  ClassProbabilities predict_proba(const NamedVector& x) const override;
  std::unique_ptr<Classifier> clone() const override {
    return std::make_unique<AdaptiveRandomForest>(*this);
  }

  const ArfcParams& params() const { return params_; }
  std::size_t size() const { return members_.size(); }
  const HoeffdingAdaptiveTree& member(std::size_t i) const { return *members_.at(i).tree; }
  double member_accuracy(std::size_t i) const;
  std::int64_t replacements() const;

  static std::unique_ptr<AdaptiveRandomForest> restore(const nlohmann::json& params,
                                                       const nlohmann::json& state);

 protected:
  nlohmann::json params_json() const override { return arfc_params_to_json(params_); }
  nlohmann::json state_json() const override;

 private:
  struct Member {
    std::unique_ptr<HoeffdingAdaptiveTree> tree;
    std::unique_ptr<HoeffdingAdaptiveTree> background;
    Adwin warning;
    Adwin drift;
    double correct = 0.0;
    double seen = 0.0;
    std::int64_t generation = 0;
    std::int64_t replacements = 0;
  };

  std::unique_ptr<HoeffdingAdaptiveTree> new_tree(std::size_t index,
                                                  std::int64_t generation) const;

  ArfcParams params_;
  std::vector<Member> members_;
  std::mt19937_64 rng_;
};

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_ARFC_H_
