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

#include "cogstream/pipeline.h"

#include <chrono>
#include <iostream>

namespace cogstream {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void RunConfig::validate() const {
  if (scenario != 1 && scenario != 2) {
    throw Error("scenario must be 1 or 2, got " + std::to_string(scenario));
  }
  if (block_size < 1) throw Error("block_size must be at least 1");
  if (horizon && *horizon < 2) throw Error("horizon must be at least 2");
}

learners::ModelSpec RunConfig::model_spec() const {
  auto spec = learners::tuned_model_spec(model, selector_mode);
  if (!model_overrides.is_null() && !model_overrides.empty()) {
    spec = learners::model_spec_from_json(model_overrides, spec);
  }
  return spec;
}

SelectorConfig RunConfig::selector_config(std::size_t default_horizon) const {
  SelectorConfig sc;
  sc.mode = selector_mode;
  sc.threshold = selector_threshold;
  sc.horizon = horizon.value_or(default_horizon);
  return sc;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"scenario", scenario},
                      {"model", learners::model_kind_name(model)},
                      {"selector", selector_mode_name(selector_mode)},
                      {"block_size", block_size},
                      {"seed", seed},
                      {"model_overrides", model_overrides}};
  j["threshold"] = selector_threshold ? nlohmann::json(*selector_threshold)
                                      : nlohmann::json(nullptr);
  j["horizon"] = horizon ? nlohmann::json(*horizon) : nlohmann::json(nullptr);
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.scenario = j.value("scenario", c.scenario);
  if (j.contains("model")) {
    c.model = learners::parse_model_kind(j["model"].get<std::string>());
  }
  if (j.contains("selector")) {
    c.selector_mode = parse_selector_mode(j["selector"].get<std::string>());
  }
  if (j.contains("threshold") && !j["threshold"].is_null()) {
    c.selector_threshold = j["threshold"].get<double>();
  }
  c.block_size = j.value("block_size", c.block_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("horizon") && !j["horizon"].is_null()) {
    c.horizon = j["horizon"].get<std::size_t>();
  }
  if (j.contains("model_overrides")) c.model_overrides = j["model_overrides"];
  c.validate();
  return c;
}

std::string_view train_action_name(TrainAction action) {
  switch (action) {
    case TrainAction::kTrainNowSingle:
      return "train_now_single";
    case TrainAction::kTrainBlock:
      return "train_block";
    case TrainAction::kSkip:
      return "skip";
  }
  return "skip";
}

TrainAction should_train(const RunConfig& config, std::int64_t count) {
  if (config.scenario == 1) return TrainAction::kTrainNowSingle;
  const auto block = static_cast<std::int64_t>(config.block_size);
  if (count > 0 && count % block == 0) return TrainAction::kTrainBlock;
  return TrainAction::kSkip;
}

MetricsSnapshot MetricsSnapshot::from_confusion(const ConfusionMatrix& cm) {
  MetricsSnapshot m;
  m.confusion = cm;
  m.samples = cm.total();
  m.accuracy = ratio(cm.tp + cm.tn, m.samples);
  m.precision_present = ratio(cm.tp, cm.tp + cm.fp);
  m.precision_absent = ratio(cm.tn, cm.tn + cm.fn);
  m.recall_present = ratio(cm.tp, cm.tp + cm.fn);
  m.recall_absent = ratio(cm.tn, cm.tn + cm.fp);
  m.precision_macro = (m.precision_present + m.precision_absent) / 2.0;
  m.recall_macro = (m.recall_present + m.recall_absent) / 2.0;
  return m;
}

nlohmann::json MetricsSnapshot::to_json() const {
  return {{"samples", samples},
          {"accuracy", accuracy},
          {"precision", {{"macro", precision_macro},
                         {"present", precision_present},
                         {"absent", precision_absent}}},
          {"recall", {{"macro", recall_macro},
                      {"present", recall_present},
                      {"absent", recall_absent}}},
          {"confusion", {{"tp", confusion.tp},
                         {"fp", confusion.fp},
                         {"fn", confusion.fn},
                         {"tn", confusion.tn}}},
          {"elapsed_seconds", elapsed_seconds},
          {"extraction_seconds", extraction_seconds}};
}

MetricsSnapshot MetricsSnapshot::from_json(const nlohmann::json& j) {
  ConfusionMatrix cm;
  const auto& c = j.at("confusion");
  cm.tp = c.at("tp").get<std::int64_t>();
  cm.fp = c.at("fp").get<std::int64_t>();
  cm.fn = c.at("fn").get<std::int64_t>();
  cm.tn = c.at("tn").get<std::int64_t>();
  auto m = from_confusion(cm);
  m.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  m.extraction_seconds = j.value("extraction_seconds", 0.0);
  return m;
}

MetricsSnapshot update_metrics(const MetricsSnapshot& m, Label y_true,
                               Label y_pred) {
  ConfusionMatrix cm = m.confusion;
  if (y_true == Label::kPresent) {
    (y_pred == Label::kPresent ? cm.tp : cm.fn) += 1;
  } else {
    (y_pred == Label::kPresent ? cm.fp : cm.tn) += 1;
  }
  auto next = MetricsSnapshot::from_confusion(cm);
  next.elapsed_seconds = m.elapsed_seconds;
  next.extraction_seconds = m.extraction_seconds;
  return next;
}

Pipeline::Pipeline(RunConfig config, std::size_t default_horizon)
    : config_(std::move(config)) {
  config_.validate();
  if (!config_.horizon) config_.horizon = std::max<std::size_t>(2, default_horizon);
  selector_ = FeatureSelector(config_.selector_config(*config_.horizon));
  model_ = learners::make_classifier(config_.model_spec(), config_.seed);
}

std::optional<PredictionRecord> Pipeline::process_session(
    const DialogueSession& session, ExtractionTransport& transport) {
  const auto start = Clock::now();
  ExtractionResult extracted;
  try {
    extracted = extract_base_features(session, transport);
  } catch (const ExtractionFailed& e) {
    metrics_.extraction_seconds += seconds_since(start);
    std::clog << "cogstream: " << e.what() << '\n';
    record_quarantine(session);
    return std::nullopt;
  }
  metrics_.extraction_seconds += seconds_since(start);
  return process_features(session, extracted.features);
}

void Pipeline::record_quarantine(const DialogueSession& session) {
  quarantined_.push_back(session.session_id);
}

PredictionRecord Pipeline::process_features(const DialogueSession& session,
                                            const BaseFeatureVector& features) {
  const auto start = Clock::now();

  auto [it, inserted] = histories_.try_emplace(session.user_id, session.user_id);
  UserHistory& history = it->second;
  history.append(features);
  population_.update(features);

  const ExpandedFeatureVector x = expand(history, features);
  selector_.observe(x);
  const SelectionMask mask = selector_.mask();
  const NamedVector xs = apply_mask(x, mask);

  PredictionRecord record;
  record.user_id = session.user_id;
  record.session_id = session.session_id;
  record.sequence = ++count_;
  record.probabilities = model_->predict_proba(xs);
  record.predicted = record.probabilities.argmax();
  record.truth = session.label;
  record.selected_slots = mask.size();
  record.timestamp = session.utterances.empty()
                         ? Timestamp{}
                         : session.utterances.back().timestamp;
  record.explanation = select_top_features(x, history, population_);
  if (observer_) observer_->on_predict(record, *model_);

  if (session.label) {
    const Label y = *session.label;
    metrics_ = update_metrics(metrics_, y, record.predicted);
    selector_.observe_label(x, y);
    block_.push_back({count_, xs, y});
    while (block_.size() > config_.block_size) block_.pop_front();
  }

  const TrainAction action = should_train(config_, count_);
  std::vector<std::int64_t> trained;
  if (action == TrainAction::kTrainNowSingle && session.label) {
    model_->learn_one(xs, *session.label);
    trained.push_back(count_);
  } else if (action == TrainAction::kTrainBlock) {
    for (const auto& sample : block_) {
      model_->learn_one(sample.x, sample.y);
      trained.push_back(sample.sequence);
    }
  }
  if (observer_ && !trained.empty()) {
    observer_->on_train(count_, action, trained, *model_);
  }

  metrics_.elapsed_seconds += seconds_since(start);
  records_.push_back(record);
  return record;
}

const std::vector<ExplanationItem>* Pipeline::latest_explanation(
    const std::string& user_id) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->user_id == user_id) return &it->explanation;
  }
  return nullptr;
}

nlohmann::json Pipeline::to_json() const {
  nlohmann::json histories = nlohmann::json::object();
  for (const auto& [user, h] : histories_) histories[user] = h.to_json();
  nlohmann::json block = nlohmann::json::array();
  for (const auto& s : block_) {
    block.push_back({{"sequence", s.sequence}, {"x", s.x}, {"y", label_name(s.y)}});
  }
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : records_) records.push_back(cogstream::to_json(r));
  return {{"config", config_.to_json()},
          {"count", count_},
          {"histories", std::move(histories)},
          {"population", population_.to_json()},
          {"selector", selector_.to_json()},
          {"model", model_->save()},
          {"block", std::move(block)},
          {"metrics", metrics_.to_json()},
          {"records", std::move(records)},
          {"quarantined", quarantined_}};
}

Pipeline Pipeline::from_json(const nlohmann::json& j) {
  Pipeline p(RunConfig::from_json(j.at("config")));
  p.count_ = j.at("count").get<std::int64_t>();
  for (const auto& [user, h] : j.at("histories").items()) {
    p.histories_.emplace(user, UserHistory::from_json(h));
  }
  p.population_ = PopulationStats::from_json(j.at("population"));
  p.selector_ = FeatureSelector::from_json(j.at("selector"));
  p.model_ = learners::load_classifier(j.at("model"));
  for (const auto& s : j.at("block")) {
    p.block_.push_back({s.at("sequence").get<std::int64_t>(),
                        s.at("x").get<NamedVector>(),
                        parse_label(s.at("y").get<std::string>())});
  }
  p.metrics_ = MetricsSnapshot::from_json(j.at("metrics"));
  for (const auto& r : j.at("records")) {
    p.records_.push_back(prediction_record_from_json(r));
  }
  p.quarantined_ = j.at("quarantined").get<std::vector<std::string>>();
  return p;
}

RunResult run_stream(const std::vector<DialogueSession>& sessions,
                     const RunConfig& config, ExtractionTransport& transport,
                     PipelineObserver* observer) {
  Pipeline pipeline(config, std::max<std::size_t>(2, sessions.size()));
  pipeline.set_observer(observer);
  for (const auto& session : sessions) {
    try {
      pipeline.process_session(session, transport);
    } catch (const Error& e) {
      std::clog << "cogstream: skipped session " << session.session_id << ": "
                << e.what() << '\n';
    }
  }
  RunResult result;
  result.metrics = pipeline.metrics();
  result.records = pipeline.records();
  result.quarantined = pipeline.quarantined();
  return result;
}

}  // namespace cogstream
