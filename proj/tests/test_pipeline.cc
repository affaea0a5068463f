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

#include <gtest/gtest.h>

#include "cogstream/pipeline.h"
#include "cogstream/synthdata.h"
#include "oracles.h"
#include "probes.h"

namespace cogstream {
namespace {

Corpus small_corpus(std::uint64_t seed) {
  CorpusSpec spec;
  spec.seed = seed;
  return generate_corpus(spec);
}

RunConfig config_for(int scenario, learners::ModelKind model) {
  RunConfig c;
  c.scenario = scenario;
  c.model = model;
  return c;
}

TEST(ShouldTrain, Examples) {
  const auto s1 = config_for(1, learners::ModelKind::kGnb);
  auto s2 = config_for(2, learners::ModelKind::kGnb);
  EXPECT_EQ(should_train(s1, 57), TrainAction::kTrainNowSingle);
  EXPECT_EQ(should_train(s2, 57), TrainAction::kSkip);
  EXPECT_EQ(should_train(s2, 100), TrainAction::kTrainBlock);
  EXPECT_EQ(should_train(s2, 200), TrainAction::kTrainBlock);
  EXPECT_EQ(should_train(s2, 0), TrainAction::kSkip);
  s2.block_size = 7;
  EXPECT_EQ(should_train(s2, 14), TrainAction::kTrainBlock);
  EXPECT_EQ(train_action_name(TrainAction::kTrainBlock), "train_block");
}

TEST(RunConfig, ValidationAndRoundTrip) {
  RunConfig c;
  c.scenario = 3;
  EXPECT_THROW(c.validate(), Error);
  c.scenario = 2;
  c.block_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c.block_size = 50;
  c.selector_mode = SelectorMode::kCorrelation;
  c.selector_threshold = 0.3;
  c.horizon = 120;
  c.model_overrides = {{"arfc", {{"n_models", 3}}}};
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.model_spec().arfc.n_models, 3);
  EXPECT_EQ(back.model_spec().arfc.features, learners::SubspaceMode::kFixed);
}

TEST(Metrics, ConfusionExamples) {
  const auto m = MetricsSnapshot::from_confusion({8, 2, 2, 8});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(m.precision_present, 0.8);
  EXPECT_DOUBLE_EQ(m.precision_absent, 0.8);
  EXPECT_DOUBLE_EQ(m.precision_macro, 0.8);
  EXPECT_DOUBLE_EQ(m.recall_macro, 0.8);

  const auto perfect = MetricsSnapshot::from_confusion({3, 0, 0, 4});
  for (double v : {perfect.accuracy, perfect.precision_macro, perfect.recall_macro,
                   perfect.precision_present, perfect.recall_absent}) {
    EXPECT_EQ(v, 1.0);
  }

  const auto never = MetricsSnapshot::from_confusion({0, 0, 5, 5});
  EXPECT_EQ(never.precision_present, 0.0);
  EXPECT_EQ(never.recall_present, 0.0);

  MetricsSnapshot inc;
  inc.elapsed_seconds = 1.5;
  inc = update_metrics(inc, Label::kPresent, Label::kAbsent);
  EXPECT_EQ(inc.confusion.fn, 1);
  EXPECT_EQ(inc.samples, 1);
  EXPECT_EQ(inc.elapsed_seconds, 1.5);

  const auto j = m.to_json();
  EXPECT_EQ(j.at("precision").at("macro"), 0.8);
  EXPECT_EQ(MetricsSnapshot::from_json(j).to_json(), j);
}

TEST(RunStream, EmptyStream) {
  StubTransport transport([](const std::string&) { return std::string("{}"); });
  const auto result = run_stream({}, RunConfig{}, transport);
  EXPECT_EQ(result.metrics.samples, 0);
  EXPECT_EQ(result.metrics.accuracy, 0.0);
  EXPECT_TRUE(result.records.empty());
  EXPECT_EQ(transport.calls(), 0);
}

TEST(Pipeline, FirstSessionPredictedByColdModelThenTrained) {
  Pipeline p(config_for(1, learners::ModelKind::kGnb));
  testing::HashProbe probe;
  p.set_observer(&probe);
  auto s = testing::make_session("u", "s1", {{Speaker::kHuman, "hello there"}}, 1000, Label::kPresent);
  s.closed = true;
  const auto r = p.process_features(s, testing::uniform_features(0.4, 1, 2));
  EXPECT_EQ(r.probabilities.present, 0.5);
  EXPECT_EQ(r.predicted, Label::kAbsent);
  ASSERT_EQ(probe.trainings.size(), 1u);
  EXPECT_EQ(probe.trainings[0].samples, std::vector<std::int64_t>{1});
  EXPECT_NE(probe.trainings[0].hash_after, probe.predict_hashes[0]);
  EXPECT_EQ(r.explanation.size(), 5u);
  EXPECT_EQ(p.metrics().confusion.fn, 1);
}

TEST(Pipeline, UnlabeledSessionsArePredictedButNotTrained) {
  Pipeline p(config_for(1, learners::ModelKind::kGnb));
  testing::HashProbe probe;
  p.set_observer(&probe);
  auto s = testing::make_session("u", "s1", {{Speaker::kHuman, "hi"}});
  const auto r = p.process_features(s, testing::uniform_features(0.4, 1, 1));
  EXPECT_FALSE(r.truth.has_value());
  EXPECT_TRUE(probe.trainings.empty());
  EXPECT_EQ(p.metrics().samples, 0);
  EXPECT_EQ(p.count(), 1);
}

TEST(Pipeline, QuarantineSkipsClassification) {
  Pipeline p(config_for(1, learners::ModelKind::kGnb));
  StubTransport broken([](const std::string&) -> std::string { throw TransportError("down"); },
                       TransportOptions{std::chrono::milliseconds(10), 1});
  auto s = testing::make_session("u", "s1", {{Speaker::kHuman, "hi"}}, 1000, Label::kAbsent);
  EXPECT_FALSE(p.process_session(s, broken).has_value());
  EXPECT_EQ(p.quarantined(), std::vector<std::string>{"s1"});
  EXPECT_EQ(p.count(), 0);
  EXPECT_EQ(broken.calls(), 2);
}

TEST(Pipeline, DeterministicRecords) {
  const auto corpus = small_corpus(3);
  const auto sessions = corpus.dialogue_sessions();
  const std::vector<DialogueSession> head(sessions.begin(), sessions.begin() + 150);
  RunConfig c = config_for(1, learners::ModelKind::kArfc);
  c.model_overrides = {{"arfc", {{"n_models", 10}}}};
  std::vector<nlohmann::json> runs;
  for (int i = 0; i < 2; ++i) {
    auto transport = make_fixture_transport(corpus);
    const auto result = run_stream(head, c, *transport);
    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : result.records) all.push_back(to_json(r));
    runs.push_back(all);
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[0].size(), 150u);
}

TEST(Pipeline, ScenarioTwoMutatesOnlyAtBlockBoundaries) {
  const auto corpus = small_corpus(4);
  const auto sessions = corpus.dialogue_sessions();
  const std::vector<DialogueSession> head(sessions.begin(), sessions.begin() + 250);
  auto transport = make_fixture_transport(corpus);
  testing::HashProbe probe;
  const auto result = run_stream(head, config_for(2, learners::ModelKind::kHatc), *transport, &probe);
  EXPECT_EQ(probe.mutation_counts(), (std::vector<std::int64_t>{100, 200}));
  ASSERT_EQ(probe.trainings.size(), 2u);
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& tr = probe.trainings[t];
    EXPECT_EQ(tr.action, TrainAction::kTrainBlock);
    ASSERT_EQ(tr.samples.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) {
      EXPECT_EQ(tr.samples[i], tr.count - 99 + static_cast<std::int64_t>(i));
    }
  }
  EXPECT_EQ(result.records.size(), 250u);
}

TEST(Pipeline, ScenarioOneTrainsAfterEveryPrediction) {
  const auto corpus = small_corpus(4);
  const auto sessions = corpus.dialogue_sessions();
  const std::vector<DialogueSession> head(sessions.begin(), sessions.begin() + 120);
  auto transport = make_fixture_transport(corpus);
  testing::HashProbe probe;
  run_stream(head, config_for(1, learners::ModelKind::kGnb), *transport, &probe);
  ASSERT_EQ(probe.trainings.size(), 120u);
  for (std::size_t i = 0; i < probe.trainings.size(); ++i) {
    EXPECT_EQ(probe.trainings[i].samples, std::vector<std::int64_t>{static_cast<std::int64_t>(i + 1)});
    if (i + 1 < probe.predict_hashes.size()) {
      // The next prediction sees exactly the model produced by this step.
      EXPECT_EQ(probe.trainings[i].hash_after, probe.predict_hashes[i + 1]);
    }
  }
}

TEST(Pipeline, MetricsMatchOracleAtEveryPrefix) {
  const auto corpus = small_corpus(5);
  const auto sessions = corpus.dialogue_sessions();
  const std::vector<DialogueSession> head(sessions.begin(), sessions.begin() + 200);
  auto transport = make_fixture_transport(corpus);
  Pipeline p(config_for(1, learners::ModelKind::kGnb), head.size());
  std::vector<std::pair<Label, Label>> pairs;
  for (const auto& s : head) {
    const auto r = p.process_session(s, *transport);
    ASSERT_TRUE(r.has_value());
    pairs.emplace_back(*r->truth, r->predicted);
    const auto o = testing::oracle_metrics(pairs);
    const auto& m = p.metrics();
    ASSERT_DOUBLE_EQ(m.accuracy, o.accuracy);
    ASSERT_DOUBLE_EQ(m.precision_present, o.precision_present);
    ASSERT_DOUBLE_EQ(m.precision_absent, o.precision_absent);
    ASSERT_DOUBLE_EQ(m.precision_macro, o.precision_macro);
    ASSERT_DOUBLE_EQ(m.recall_present, o.recall_present);
    ASSERT_DOUBLE_EQ(m.recall_absent, o.recall_absent);
    ASSERT_DOUBLE_EQ(m.recall_macro, o.recall_macro);
  }
}

TEST(Pipeline, SnapshotRestoreContinuesIdentically) {
  const auto corpus = small_corpus(6);
  const auto sessions = corpus.dialogue_sessions();
  auto transport = make_fixture_transport(corpus);
  RunConfig c = config_for(2, learners::ModelKind::kHatc);
  c.block_size = 30;
  Pipeline a(c);
  for (std::size_t i = 0; i < 75; ++i) a.process_session(sessions[i], *transport);
  Pipeline b = Pipeline::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(b.to_json(), a.to_json());
  for (std::size_t i = 75; i < 140; ++i) {
    const auto ra = a.process_session(sessions[i], *transport);
    const auto rb = b.process_session(sessions[i], *transport);
    ASSERT_EQ(to_json(*ra), to_json(*rb));
  }
}

TEST(RunStream, PerfectlyEncodedSlotBeatsMajority) {
  // Labels encoded in one base feature; every other score is noise.
  std::mt19937_64 rng(12);
  std::bernoulli_distribution coin(0.4);
  std::vector<DialogueSession> sessions;
  std::vector<BaseFeatureVector> features;
  for (int i = 0; i < 500; ++i) {
    const Label y = coin(rng) ? Label::kPresent : Label::kAbsent;
    auto s = testing::make_session("u" + std::to_string(i % 20), "s" + std::to_string(i),
                                   {{Speaker::kHuman, "word"}}, 1000 + i * 100, y);
    auto v = testing::random_features(rng);
    v.set(2, y == Label::kPresent ? 0.9 : 0.1);
    sessions.push_back(s);
    features.push_back(v);
  }
  Pipeline p(config_for(1, learners::ModelKind::kArfc), sessions.size());
  std::size_t correct = 0, total = 0, present = 0;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto r = p.process_features(sessions[i], features[i]);
    if (i >= 300) {
      ++total;
      if (r.predicted == *r.truth) ++correct;
      if (*r.truth == Label::kPresent) ++present;
    }
  }
  const double majority = std::max(present, total - present) / static_cast<double>(total);
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), majority + 0.10);
}

TEST(RunStream, ScenarioOneNotWorseThanScenarioTwo) {
  const auto corpus = small_corpus(7);
  const auto sessions = corpus.dialogue_sessions();
  auto t1 = make_fixture_transport(corpus);
  auto t2 = make_fixture_transport(corpus);
  RunConfig c1 = config_for(1, learners::ModelKind::kHatc);
  RunConfig c2 = config_for(2, learners::ModelKind::kHatc);
  const auto r1 = run_stream(sessions, c1, *t1);
  const auto r2 = run_stream(sessions, c2, *t2);
  EXPECT_EQ(r1.metrics.samples, 601);
  EXPECT_GE(r1.metrics.accuracy, r2.metrics.accuracy - 0.1);
  EXPECT_GT(r1.metrics.elapsed_seconds, 0.0);
}

}  // namespace
}  // namespace cogstream
