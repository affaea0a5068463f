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

#include "cogstream/learners/factory.h"

namespace cogstream::learners {

nlohmann::json Classifier::save() const {
  return {{"format", "cogstream-model"},
          {"version", kCheckpointVersion},
          {"kind", kind()},
          {"params", params_json()},
          {"state", state_json()}};
}

std::unique_ptr<Classifier> load_classifier(const nlohmann::json& checkpoint) {
  if (checkpoint.value("format", std::string()) != "cogstream-model") {
    throw Error("not a model checkpoint");
  }
  if (checkpoint.value("version", 0) != kCheckpointVersion) {
    throw Error("unsupported checkpoint version");
  }
  const auto kind = parse_model_kind(checkpoint.at("kind").get<std::string>());
  const auto& params = checkpoint.at("params");
  const auto& state = checkpoint.at("state");
  switch (kind) {
    case ModelKind::kGnb: return GaussianNaiveBayes::restore(state);
    case ModelKind::kAlma: return Alma::restore(params, state);
    case ModelKind::kHatc: return HoeffdingAdaptiveTree::restore(params, state);
    case ModelKind::kArfc: return AdaptiveRandomForest::restore(params, state);
  }
  throw Error("unreachable model kind");
}

std::string checkpoint_hash(const Classifier& model) {
  return sha256_hex(model.save().dump());
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGnb: return "gnb";
    case ModelKind::kAlma: return "alma";
    case ModelKind::kHatc: return "hatc";
    case ModelKind::kArfc: return "arfc";
  }
  return "arfc";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "gnb") return ModelKind::kGnb;
  if (text == "alma") return ModelKind::kAlma;
  if (text == "hatc") return ModelKind::kHatc;
  if (text == "arfc") return ModelKind::kArfc;
  throw Error("unknown model '" + std::string(text) + "'");
}

ModelSpec tuned_model_spec(ModelKind kind, SelectorMode mode) {
  ModelSpec spec;
  spec.kind = kind;
  spec.alma = AlmaParams{0.5, 1.0, 1.0};
  spec.hatc.max_depth.reset();
  spec.hatc.tie_threshold = 0.5;
  spec.hatc.max_size = 50;
  spec.arfc.lambda = 50.0;
  if (mode == SelectorMode::kCorrelation) {
    spec.arfc.n_models = 10;
    spec.arfc.features = SubspaceMode::kFixed;
    spec.arfc.max_features = 5;
  } else {
    spec.arfc.n_models = 100;
    spec.arfc.features = SubspaceMode::kSqrt;
  }
  return spec;
}

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
  return {{"kind", model_kind_name(spec.kind)},
          {"alma", {{"alpha", spec.alma.alpha}, {"B", spec.alma.b}, {"C", spec.alma.c}}},
          {"hatc", hatc_params_to_json(spec.hatc)},
          {"arfc", arfc_params_to_json(spec.arfc)}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j, ModelSpec base) {
  if (j.contains("kind")) base.kind = parse_model_kind(j["kind"].get<std::string>());
  if (j.contains("alma")) {
    const auto& a = j["alma"];
    base.alma.alpha = a.value("alpha", base.alma.alpha);
    base.alma.b = a.value("B", base.alma.b);
    base.alma.c = a.value("C", base.alma.c);
  }
  if (j.contains("hatc")) {
    nlohmann::json merged = hatc_params_to_json(base.hatc);
    merged.merge_patch(j["hatc"]);
    base.hatc = hatc_params_from_json(merged);
  }
  if (j.contains("arfc")) {
    nlohmann::json merged = arfc_params_to_json(base.arfc);
    merged.merge_patch(j["arfc"]);
    base.arfc = arfc_params_from_json(merged);
  }
  return base;
}

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec,
                                            std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kGnb: return std::make_unique<GaussianNaiveBayes>();
    case ModelKind::kAlma: return std::make_unique<Alma>(spec.alma);
    case ModelKind::kHatc: {
      HatcParams p = spec.hatc;
      p.seed = seed;
      return std::make_unique<HoeffdingAdaptiveTree>(p);
    }
    case ModelKind::kArfc: {
      ArfcParams p = spec.arfc;
      p.seed = seed;
      return std::make_unique<AdaptiveRandomForest>(p);
    }
  }
  throw Error("unreachable model kind");
}

}  // namespace cogstream::learners
