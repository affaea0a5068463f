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

#include "cogstream/learners/arfc.h"

#include <sstream>

namespace cogstream::learners {

nlohmann::json arfc_params_to_json(const ArfcParams& p) {
  std::string features = "sqrt";
  if (p.features == SubspaceMode::kFixed) features = "fixed";
  if (p.features == SubspaceMode::kAll) features = "all";
  return {{"n_models", p.n_models},
          {"features", features},
          {"max_features", p.max_features},
          {"lambda", p.lambda},
          {"warning_delta", p.warning_delta},
          {"drift_delta", p.drift_delta},
          {"majority_vote", p.majority_vote},
          {"disable_poisson", p.disable_poisson},
          {"tree", hatc_params_to_json(p.tree)},
          {"seed", p.seed}};
}

ArfcParams arfc_params_from_json(const nlohmann::json& j) {
  ArfcParams p;
  p.n_models = j.value("n_models", p.n_models);
  const std::string features = j.value("features", std::string("sqrt"));
  if (features == "sqrt") {
    p.features = SubspaceMode::kSqrt;
  } else if (features == "fixed") {
    p.features = SubspaceMode::kFixed;
  } else if (features == "all") {
    p.features = SubspaceMode::kAll;
  } else {
    throw Error("unknown ARFC feature mode '" + features + "'");
  }
  p.max_features = j.value("max_features", p.max_features);
  p.lambda = j.value("lambda", p.lambda);
  p.warning_delta = j.value("warning_delta", p.warning_delta);
  p.drift_delta = j.value("drift_delta", p.drift_delta);
  p.majority_vote = j.value("majority_vote", p.majority_vote);
  p.disable_poisson = j.value("disable_poisson", p.disable_poisson);
  if (j.contains("tree")) p.tree = hatc_params_from_json(j["tree"]);
  p.seed = j.value("seed", p.seed);
  return p;
}

AdaptiveRandomForest::AdaptiveRandomForest(ArfcParams params)
    : params_(params), rng_(params.seed) {
  if (params_.n_models < 1) throw Error("ARFC needs at least one member");
  if (!(params_.lambda > 0.0) && !params_.disable_poisson) {
    throw Error("ARFC lambda must be positive");
  }
  members_.resize(static_cast<std::size_t>(params_.n_models));
  for (std::size_t i = 0; i < members_.size(); ++i) {
    members_[i].tree = new_tree(i, 0);
    members_[i].warning = Adwin(params_.warning_delta);
    members_[i].drift = Adwin(params_.drift_delta);
  }
}

AdaptiveRandomForest::AdaptiveRandomForest(const AdaptiveRandomForest& other)
    : params_(other.params_), rng_(other.rng_) {
  members_.reserve(other.members_.size());
  for (const auto& m : other.members_) {
    Member copy;
    copy.tree = std::make_unique<HoeffdingAdaptiveTree>(*m.tree);
    if (m.background) copy.background = std::make_unique<HoeffdingAdaptiveTree>(*m.background);
    copy.warning = m.warning;
    copy.drift = m.drift;
    copy.correct = m.correct;
    copy.seen = m.seen;
    copy.generation = m.generation;
    copy.replacements = m.replacements;
    members_.push_back(std::move(copy));
  }
}

std::unique_ptr<HoeffdingAdaptiveTree> AdaptiveRandomForest::new_tree(
    std::size_t index, std::int64_t generation) const {
  HatcParams tp = params_.tree;
  tp.subspace = params_.features;
  tp.subspace_size = params_.max_features;
  // Member i of generation 0 shares the ensemble seed offset by i.
  tp.seed = params_.seed + index + 7919ULL * static_cast<std::uint64_t>(generation);
  return std::make_unique<HoeffdingAdaptiveTree>(tp);
}

double AdaptiveRandomForest::member_accuracy(std::size_t i) const {
  const Member& m = members_.at(i);
  return m.seen > 0.0 ? m.correct / m.seen : 0.0;
}

std::int64_t AdaptiveRandomForest::replacements() const {
  std::int64_t n = 0;
  for (const auto& m : members_) n += m.replacements;
  return n;
}

void AdaptiveRandomForest::learn_one(const NamedVector& x, Label y, double weight) {
  if (!(weight > 0.0)) return;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    Member& m = members_[i];
    const bool correct = m.tree->predict(x) == y;
    m.seen += 1.0;
    if (correct) m.correct += 1.0;
    const double err = correct ? 0.0 : 1.0;

    const double warn_before = m.warning.estimation();
    if (m.warning.update(err) && m.warning.estimation() > warn_before) {
      m.background = new_tree(i, m.generation + 1);
      m.warning = Adwin(params_.warning_delta);
    }
    const double drift_before = m.drift.estimation();
    if (m.drift.update(err) && m.drift.estimation() > drift_before) {
      ++m.generation;
      m.tree = m.background ? std::move(m.background) : new_tree(i, m.generation);
      m.background.reset();
      m.warning = Adwin(params_.warning_delta);
      m.drift = Adwin(params_.drift_delta);
      m.correct = m.seen = 0.0;
      ++m.replacements;
    }

    int k = 1;
    if (!params_.disable_poisson) {
      std::poisson_distribution<int> poisson(params_.lambda);
      k = poisson(rng_);
    }
    if (k <= 0) continue;
    const double w = weight * static_cast<double>(k);
    m.tree->learn_one(x, y, w);
    if (m.background) m.background->learn_one(x, y, w);
  }
}

ClassProbabilities AdaptiveRandomForest::predict_proba(const NamedVector& x) const {
  const std::size_t n = members_.size();
  std::vector<ClassProbabilities> votes;
  votes.reserve(n);
  for (const auto& m : members_) votes.push_back(m.tree->predict_proba(x));

  ClassProbabilities out{0.0, 0.0};
  if (params_.majority_vote) {
    for (const auto& v : votes) {
      if (v.argmax() == Label::kPresent) out.present += 1.0;
    }
    out.present /= static_cast<double>(n);
    out.absent = 1.0 - out.present;
    return out;
  }

  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = member_accuracy(i);
    total += w[i];
  }
  if (total <= 0.0) {
    for (const auto& v : votes) {
      out.present += v.present;
      out.absent += v.absent;
    }
    out.present /= static_cast<double>(n);
    out.absent /= static_cast<double>(n);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.present += w[i] / total * votes[i].present;
    out.absent += w[i] / total * votes[i].absent;
  }
  return out;
}

nlohmann::json AdaptiveRandomForest::state_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) {
    nlohmann::json j = {{"tree", m.tree->save()},
                        {"warning", m.warning.to_json()},
                        {"drift", m.drift.to_json()},
                        {"correct", m.correct},
                        {"seen", m.seen},
                        {"generation", m.generation},
                        {"replacements", m.replacements}};
    j["background"] = m.background ? m.background->save() : nlohmann::json(nullptr);
    members.push_back(std::move(j));
  }
  std::ostringstream rng;
  rng << rng_;
  return {{"members", std::move(members)}, {"rng", rng.str()}};
}

std::unique_ptr<AdaptiveRandomForest> AdaptiveRandomForest::restore(
    const nlohmann::json& params, const nlohmann::json& state) {
  auto forest = std::make_unique<AdaptiveRandomForest>(arfc_params_from_json(params));
  const auto& members = state.at("members");
  if (members.size() != forest->members_.size()) {
    throw Error("ARFC checkpoint member count does not match its parameters");
  }
  auto load_tree = [](const nlohmann::json& ck) {
    return HoeffdingAdaptiveTree::restore(ck.at("params"), ck.at("state"));
  };
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& j = members[i];
    Member& m = forest->members_[i];
    m.tree = load_tree(j.at("tree"));
    m.background.reset();
    if (!j.at("background").is_null()) m.background = load_tree(j["background"]);
    m.warning = Adwin::from_json(j.at("warning"));
    m.drift = Adwin::from_json(j.at("drift"));
    m.correct = j.at("correct").get<double>();
    m.seen = j.at("seen").get<double>();
    m.generation = j.at("generation").get<std::int64_t>();
    m.replacements = j.at("replacements").get<std::int64_t>();
  }
  std::istringstream rng(state.at("rng").get<std::string>());
  rng >> forest->rng_;
  return forest;
}

}  // namespace cogstream::learners
