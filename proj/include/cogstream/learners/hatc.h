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

#ifndef COGSTREAM_LEARNERS_HATC_H_
#define COGSTREAM_LEARNERS_HATC_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "cogstream/learners/classifier.h"

namespace cogstream::learners {

// How many candidate slots a leaf may consider at each split attempt.
enum class SubspaceMode { kAll, kSqrt, kFixed };

struct HatcParams {
  std::optional<int> max_depth;  // unset = unlimited
  double tie_threshold = 0.05;
  int max_size = 100;  // node budget of the main tree
  double grace_period = 200.0;
  double split_confidence = 1e-7;
  int n_split_points = 10;
  double adwin_delta = 0.002;
  double switch_significance = 0.05;
  std::int64_t drift_window_threshold = 300;
  SubspaceMode subspace = SubspaceMode::kAll;
  int subspace_size = 0;  // used with kFixed
  std::uint64_t seed = 42;
};

nlohmann::json hatc_params_to_json(const HatcParams& p);
HatcParams hatc_params_from_json(const nlohmann::json& j);

// Hoeffding Adaptive Tree. Leaves keep per-class Gaussian slot estimators
// and predict with naive-Bayes-adaptive voting; every node watches its
// subtree's 0/1 error with ADWIN and grows a background subtree when the
// error rises, swapping it in once it is significantly better.
class HoeffdingAdaptiveTree : public Classifier {
 public:
  explicit HoeffdingAdaptiveTree(HatcParams params = {});
  HoeffdingAdaptiveTree(const HoeffdingAdaptiveTree& other);
  HoeffdingAdaptiveTree& operator=(const HoeffdingAdaptiveTree& other);
  HoeffdingAdaptiveTree(HoeffdingAdaptiveTree&&) noexcept;
  HoeffdingAdaptiveTree& operator=(HoeffdingAdaptiveTree&&) noexcept;
  ~HoeffdingAdaptiveTree() override;

  std::string_view kind() const override { return "hatc"; }

  void learn_one(const NamedVector& x, Label y, double weight = 1.0) override;
  ClassProbabilities predict_proba(const NamedVector& x) const override;
  std::unique_ptr<Classifier> clone() const override {
    return std::make_unique<HoeffdingAdaptiveTree>(*this);
  }

  const HatcParams& params() const { return params_; }
  int node_count() const;
  int leaf_count() const;
  int depth() const;
  int alternate_trees() const;
  std::int64_t switches() const { return switches_; }
  std::int64_t splits() const { return splits_; }

  nlohmann::json state_json() const override;
  static std::unique_ptr<HoeffdingAdaptiveTree> restore(
      const nlohmann::json& params, const nlohmann::json& state);

 protected:
  nlohmann::json params_json() const override { return hatc_params_to_json(params_); }

 private:
  struct Node;

  void learn_node(std::unique_ptr<Node>& node, const NamedVector& x, Label y,
                  double weight, std::optional<Label> path_prediction);
  void learn_leaf(Node& leaf, const NamedVector& x, Label y, double weight);
  void attempt_split(Node& leaf);
  std::vector<std::string> candidate_slots(const Node& leaf);

  HatcParams params_;
  std::unique_ptr<Node> root_;
  std::mt19937_64 rng_;
  std::int64_t switches_ = 0;
  std::int64_t splits_ = 0;
};

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_HATC_H_
