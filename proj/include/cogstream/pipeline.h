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

#ifndef COGSTREAM_PIPELINE_H_
#define COGSTREAM_PIPELINE_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/explain.h"
#include "cogstream/extraction.h"
#include "cogstream/features.h"
#include "cogstream/learners/factory.h"
#include "cogstream/records.h"
#include "cogstream/selection.h"
#include "cogstream/transport.h"

namespace cogstream {

inline constexpr std::size_t kDefaultHorizon = 601;

struct RunConfig {
  int scenario = 1;
  learners::ModelKind model = learners::ModelKind::kArfc;
  SelectorMode selector_mode = SelectorMode::kVariance;
  std::optional<double> selector_threshold;
  std::size_t block_size = 100;
  std::uint64_t seed = 42;
  // Expected stream length used to size the selector warm-ups. Unset means
  // "length of the stream" for batch runs and kDefaultHorizon otherwise.
  std::optional<std::size_t> horizon;
  // JSON merge patch applied on top of the tuned hyperparameters.
  nlohmann::json model_overrides = nlohmann::json::object();

  // Throws Error when scenario or block_size is out of range.
  void validate() const;
  learners::ModelSpec model_spec() const;
  SelectorConfig selector_config(std::size_t default_horizon) const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

enum class TrainAction { kTrainNowSingle, kTrainBlock, kSkip };

std::string_view train_action_name(TrainAction action);

TrainAction should_train(const RunConfig& config, std::int64_t count);

struct ConfusionMatrix {
  std::int64_t tp = 0;  // 'present' is the positive class
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricsSnapshot {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double precision_present = 0.0;
  double precision_absent = 0.0;
  double recall_macro = 0.0;
  double recall_present = 0.0;
  double recall_absent = 0.0;
  double elapsed_seconds = 0.0;     // classification loop only
  double extraction_seconds = 0.0;  // transport round trips
  std::int64_t samples = 0;

  static MetricsSnapshot from_confusion(const ConfusionMatrix& cm);

  nlohmann::json to_json() const;
  static MetricsSnapshot from_json(const nlohmann::json& j);
};

MetricsSnapshot update_metrics(const MetricsSnapshot& m, Label y_true,
                               Label y_pred);

// Instrumentation hooks. on_predict fires after the prediction for a sample
// and before any training on it; on_train fires after each training step and
// lists the sequence numbers that were fed to the model, in order.
class PipelineObserver {
 public:
  virtual ~PipelineObserver() = default;
  virtual void on_predict(const PredictionRecord& record,
                          const learners::Classifier& model) {
    (void)record;
    (void)model;
  }
  virtual void on_train(std::int64_t count, TrainAction action,
                        const std::vector<std::int64_t>& samples,
                        const learners::Classifier& model) {
    (void)count;
    (void)action;
    (void)samples;
    (void)model;
  }
};

// The state bundle of one evaluation loop: histories, population counters,
// selector, model, block buffer, metrics and emitted records.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::size_t default_horizon = kDefaultHorizon);

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;
  Pipeline(Pipeline&&) = default;
  Pipeline& operator=(Pipeline&&) = default;

  // Extraction followed by classification. Returns nullopt (and records the
  // session as quarantined) when extraction permanently fails.
  std::optional<PredictionRecord> process_session(const DialogueSession& session,
                                                  ExtractionTransport& transport);

  // Classification only, from already extracted base features.
  PredictionRecord process_features(const DialogueSession& session,
                                    const BaseFeatureVector& features);

  // Notes a session whose extraction permanently failed.
  void record_quarantine(const DialogueSession& session);

  // Wall-clock accounting for callers that extract outside the pipeline, and
  // for log replay, which restores the recorded totals instead of re-timing.
  void add_extraction_time(double seconds) { metrics_.extraction_seconds += seconds; }
  void restore_timing(double elapsed_seconds, double extraction_seconds) {
    metrics_.elapsed_seconds = elapsed_seconds;
    metrics_.extraction_seconds = extraction_seconds;
  }

  void set_observer(PipelineObserver* observer) { observer_ = observer; }

  const RunConfig& config() const { return config_; }
  std::int64_t count() const { return count_; }
  const MetricsSnapshot& metrics() const { return metrics_; }
  const std::vector<PredictionRecord>& records() const { return records_; }
  const std::vector<std::string>& quarantined() const { return quarantined_; }
  const std::map<std::string, UserHistory>& histories() const { return histories_; }
  const PopulationStats& population() const { return population_; }
  const FeatureSelector& selector() const { return selector_; }
  const learners::Classifier& model() const { return *model_; }
  // Latest explanation items for a user, if any.
  const std::vector<ExplanationItem>* latest_explanation(const std::string& user_id) const;

  nlohmann::json to_json() const;
  static Pipeline from_json(const nlohmann::json& j);

 private:
  struct BufferedSample {
    std::int64_t sequence;
    NamedVector x;
    Label y;
  };

  void train(const NamedVector& x, Label y);

  RunConfig config_;
  std::map<std::string, UserHistory> histories_;
  PopulationStats population_;
  FeatureSelector selector_;
  std::unique_ptr<learners::Classifier> model_;
  std::deque<BufferedSample> block_;
  std::int64_t count_ = 0;
  MetricsSnapshot metrics_;
  std::vector<PredictionRecord> records_;
  std::vector<std::string> quarantined_;
  PipelineObserver* observer_ = nullptr;
};

struct RunResult {
  MetricsSnapshot metrics;
  std::vector<PredictionRecord> records;
  std::vector<std::string> quarantined;
};

RunResult run_stream(const std::vector<DialogueSession>& sessions,
                     const RunConfig& config, ExtractionTransport& transport,
                     PipelineObserver* observer = nullptr);

}  // namespace cogstream

#endif  // COGSTREAM_PIPELINE_H_
