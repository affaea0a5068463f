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

#ifndef COGSTREAM_LEARNERS_FACTORY_H_
#define COGSTREAM_LEARNERS_FACTORY_H_

#include <cstdint>
#include <memory>
#include <string_view>

#include "cogstream/learners/alma.h"
#include "cogstream/learners/arfc.h"
#include "cogstream/learners/classifier.h"
#include "cogstream/learners/gnb.h"
#include "cogstream/learners/hatc.h"
#include "cogstream/selection.h"

namespace cogstream::learners {

enum class ModelKind { kGnb, kAlma, kHatc, kArfc };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::kArfc;
  AlmaParams alma;
  HatcParams hatc;
  ArfcParams arfc;
};

// Hyperparameters that tuned best for each selector mode:
//   ALMA alpha=0.5 B=1.0 C=1.0; HATC unlimited depth, tie threshold 0.5,
//   max size 50; ARFC 10 models / 5 features / lambda 50 with correlation
//   selection and 100 models / sqrt features / lambda 50 with variance
//   selection.
ModelSpec tuned_model_spec(ModelKind kind, SelectorMode mode);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
// Missing fields keep the values already in `base`.
ModelSpec model_spec_from_json(const nlohmann::json& j, ModelSpec base);

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec,
                                            std::uint64_t seed);

}  // namespace cogstream::learners

#endif  // COGSTREAM_LEARNERS_FACTORY_H_
