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

// Acceptance runner: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cogstream/extraction.h"
#include "cogstream/features.h"
#include "cogstream/learners/adwin.h"
#include "cogstream/learners/alma.h"
#include "cogstream/learners/arfc.h"
#include "cogstream/learners/gnb.h"
#include "cogstream/learners/hatc.h"
#include "cogstream/pipeline.h"
#include "cogstream/selection.h"
#include "cogstream/synthdata.h"
#include "oracles.h"
#include "probes.h"
#include "service_driver.h"

namespace cs = cogstream;
namespace ct = cogstream::testing;
namespace cl = cogstream::learners;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome history_oracle() {
  Outcome out;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 50);
  for (int h = 0; h < 1000 && out.pass; ++h) {
    cs::UserHistory history("u");
    cs::BaseFeatureVector last;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      last = ct::random_features(rng);
      history.append(last);
    }
    for (int f = 1; f <= cs::kNumBaseFeatures; ++f) {
      const auto& s = history.series(f);
      out.require(history.running_average(f) == ct::oracle_mean(s), "average mismatch");
      for (int q = 1; q <= 3; ++q) {
        out.require(history.quartile(f, q) == ct::oracle_quartile(s, q), "quartile mismatch");
      }
    }
    const auto x = cs::expand(history, last);
    out.require(x.size() == 110 && x.to_named().size() == 110, "expansion is not 110 slots");
  }
  if (out.pass) out.detail = "1000 histories exact";
  return out;
}

Outcome extraction_contract() {
  Outcome out;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    cs::ReplyScores scores;
    for (auto& v : scores) v = unit(rng);
    out.require(cs::parse_extraction_response(cs::serialize_scores(scores)) == scores,
                "schema round trip is not identity");
  }

  static const std::vector<std::string> vocab = {"hello", "I", "went", "to", "the", "market",
                                                 "¿qué", "tal?", "well...", "yes", "don't", "42"};
  static const std::vector<std::string> gaps = {" ", "  ", "\t", " \n "};
  std::uniform_int_distribution<int> turns(1, 12), words(1, 15);
  std::uniform_int_distribution<std::size_t> pick_word(0, vocab.size() - 1), pick_gap(0, gaps.size() - 1);
  std::bernoulli_distribution human(0.5);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::pair<cs::Speaker, std::string>> ts;
    const int n = turns(rng);
    for (int t = 0; t < n; ++t) {
      std::string text;
      const int w = words(rng);
      for (int k = 0; k < w; ++k) text += (k ? gaps[pick_gap(rng)] : "") + vocab[pick_word(rng)];
      ts.emplace_back(human(rng) ? cs::Speaker::kHuman : cs::Speaker::kBot, text);
    }
    const auto s = ct::make_session("u", "s", ts);
    out.require(cs::count_human_interactions(s) == static_cast<std::int64_t>(ct::oracle_human_turns(s)),
                "interaction counter mismatch");
    out.require(cs::count_words(s) == static_cast<std::int64_t>(ct::oracle_word_count(s)),
                "word counter mismatch");
  }

  cs::ReplyScores good;
  for (auto& v : good) v = 0.25;
  for (int k = 0; k < 3; ++k) {
    int calls = 0;
    cs::StubTransport flaky(
        [&](const std::string&) -> std::string {
          ++calls;
          if (calls <= k) {
            if (calls % 2) return "I cannot answer that.";
            throw cs::TransportError("timeout");
          }
          return "Sure! " + cs::serialize_scores(good);
        },
        cs::TransportOptions{std::chrono::milliseconds(10), 3});
    const auto s = ct::make_session("u", "s", {{cs::Speaker::kHuman, "two words"}});
    const auto r = cs::extract_base_features(s, flaky);
    out.require(r.attempts == k + 1, "retry count wrong");
    out.require(r.features.at(1) == 0.25 && r.features.words() == 2, "retried result wrong");
  }
  if (out.pass) out.detail = "500 round trips, 500 transcripts, retries k=0..2";
  return out;
}

Outcome selector_correctness() {
  Outcome out;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  cs::CorrelationState corr;
  std::vector<std::vector<double>> cols(cs::kNumExpandedSlots);
  std::vector<double> ys;
  for (int n = 0; n < 10000; ++n) {
    const int y = coin(rng);
    cs::ExpandedFeatureVector x;
    for (int i = 0; i < cs::kNumExpandedSlots; ++i) {
      const double v = 0.05 * (i % 9) * y + g(rng) * (1 + i % 4) + (i % 5 == 0 ? 500.0 : 0.0);
      x.set(i / 5 + 1, cs::Statistic(i % 5), v);
      cols[static_cast<std::size_t>(i)].push_back(v);
    }
    ys.push_back(y);
    corr.update(x, y);
  }
  double worst = 0.0;
  for (int i = 0; i < cs::kNumExpandedSlots; ++i) {
    const double a = corr.pearson(i);
    const double b = ct::oracle_pearson(cols[static_cast<std::size_t>(i)], ys);
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  out.require(worst <= 1e-9, "streaming Pearson off by " + fmt("%.3g", worst));

  // Variance masks: incremental vs recomputed from scratch, every step.
  cs::SelectorConfig cfg;
  cfg.mode = cs::SelectorMode::kVariance;
  cfg.horizon = 400;
  cs::FeatureSelector sel(cfg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 12), words(5, 150);
  std::vector<cs::ExpandedFeatureVector> seen;
  const std::size_t warm = 80;
  double threshold = 0.0;
  for (int n = 0; n < 400 && out.pass; ++n) {
    cs::ExpandedFeatureVector x;
    for (int f = 1; f <= cs::kNumBaseFeatures; ++f) {
      for (int s = 0; s < cs::kNumStatistics; ++s) {
        double v = unit(rng) * 0.02 * (f % 6);
        if (f == cs::kInteractionsFeature) v = count(rng);
        if (f == cs::kWordsFeature) v = words(rng);
        x.set(f, cs::Statistic(s), v);
      }
    }
    seen.push_back(x);
    sel.observe(x);
    const auto mask = sel.mask();
    if (seen.size() < warm) {
      out.require(mask == cs::SelectionMask::full(), "mask not full during warm-up");
      continue;
    }
    if (seen.size() == warm) {
      std::vector<double> v;
      for (int i = 0; i < cs::kNumExpandedSlots; ++i) {
        std::vector<double> col;
        for (const auto& s : seen) col.push_back(s.at(i));
        v.push_back(ct::oracle_population_variance(col));
      }
      std::sort(v.begin(), v.end());
      threshold = v[static_cast<std::size_t>(std::ceil(0.1 * v.size())) - 1];
    }
    std::set<std::string> expected;
    for (int i = 0; i < cs::kNumExpandedSlots; ++i) {
      std::vector<double> col;
      for (const auto& s : seen) col.push_back(s.at(i));
      const double var = ct::oracle_population_variance(col);
      const auto& name = cs::slot_names()[static_cast<std::size_t>(i)];
      if (var > threshold) expected.insert(name);
      const auto ref = *cs::parse_slot_name(name);
      if (cs::is_counter_feature(ref.feature_id) && var > 1.0) {
        out.require(mask.contains(name), "counter slot " + name + " dropped");
      }
    }
    if (expected.empty()) expected = cs::SelectionMask::full().slots();
    out.require(mask.slots() == expected, "mask differs at step " + std::to_string(n));
  }
  if (out.pass) out.detail = "Pearson rel err " + fmt("%.2g", worst) + ", 400 masks equal";
  return out;
}

struct Sample {
  cs::NamedVector x;
  cs::Label y;
};

Outcome learner_oracles() {
  Outcome out;
  std::vector<std::string> timings;
  auto timed = [&](const std::string& name, const std::function<void()>& body) {
    const auto start = Clock::now();
    body();
    const double s = seconds_since(start);
    out.require(s < 60.0, name + " took too long");
    timings.push_back(name + " " + fmt("%.2fs", s));
  };

  timed("gnb", [&] {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(2.0, 3.0);
    std::bernoulli_distribution coin(0.45);
    cl::GaussianNaiveBayes gnb;
    std::array<std::map<std::string, std::vector<double>>, 2> cols;
    std::array<double, 2> counts{};
    for (int i = 0; i < 1000; ++i) {
      const auto y = coin(rng) ? cs::Label::kPresent : cs::Label::kAbsent;
      const std::size_t c = y == cs::Label::kPresent;
      cs::NamedVector x{{"a", g(rng) + c}, {"b", g(rng) * 50}, {"c", g(rng) - c}};
      gnb.learn_one(x, y);
      counts[c] += 1;
      for (const auto& [k, v] : x) cols[c][k].push_back(v);
    }
    const cs::NamedVector q{{"a", 2.5}, {"b", 10.0}, {"c", 1.0}};
    std::array<double, 2> lj{};
    for (std::size_t c = 0; c < 2; ++c) {
      const auto y = c ? cs::Label::kPresent : cs::Label::kAbsent;
      lj[c] = std::log(counts[c] / 1000.0);
      for (const auto& [slot, values] : cols[c]) {
        const double mu = ct::oracle_mean(values);
        const double var = ct::oracle_sample_variance(values);
        const auto* e = gnb.estimator(y, slot);
        out.require(ct::relative_close(e->mean(), mu, 1e-9), "GNB mean differs from batch");
        out.require(ct::relative_close(e->variance(), var, 1e-9), "GNB variance differs from batch");
        const double v = q.at(slot);
        lj[c] += -0.5 * std::log(2 * M_PI * var) - (v - mu) * (v - mu) / (2 * var);
      }
    }
    const double present = 1.0 / (1.0 + std::exp(lj[0] - lj[1]));
    out.require(ct::relative_close(gnb.predict_proba(q).present, present, 1e-9),
                "GNB posterior differs from batch");
  });

  timed("alma", [&] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    std::bernoulli_distribution coin(0.5);
    cl::Alma noisy({0.5, 1.0, 1.0});
    for (int i = 0; i < 10000; ++i) {
      noisy.learn_one({{"a", g(rng)}, {"b", g(rng)}, {"c", g(rng)}}, coin(rng) ? cs::Label::kPresent : cs::Label::kAbsent);
      out.require(noisy.weight_norm() <= 1.0 + 1e-12, "ALMA left the unit ball");
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    cl::Alma alma({0.5, 1.0, 1.0});
    int correct = 0, seen = 0;
    while (seen < 2000) {
      const double a = u(rng), b = u(rng);
      const double d = (a + b) / std::sqrt(2.0);
      if (std::abs(d) < 0.3) continue;
      const cs::NamedVector x{{"a", a}, {"b", b}};
      const auto y = d > 0 ? cs::Label::kPresent : cs::Label::kAbsent;
      if (seen >= 1500 && alma.predict(x) == y) ++correct;
      alma.learn_one(x, y);
      out.require(alma.weight_norm() <= 1.0 + 1e-12, "ALMA left the unit ball");
      ++seen;
    }
    out.require(correct / 500.0 >= 0.95, "ALMA separable accuracy " + fmt("%.3f", correct / 500.0));
  });

  timed("adwin", [&] {
    cl::Adwin constant(0.002);
    for (int i = 0; i < 10000; ++i) out.require(!constant.update(0.0), "ADWIN fired on a constant stream");
    std::mt19937_64 rng(6);
    cl::Adwin a(0.002);
    int detected = -1;
    for (int i = 0; i < 2000 && detected < 0; ++i) {
      std::bernoulli_distribution b(i < 1000 ? 0.1 : 0.9);
      if (a.update(b(rng) ? 1.0 : 0.0)) detected = i;
    }
    out.require(detected >= 1000 && detected - 1000 < 300,
                "ADWIN detection at " + std::to_string(detected));
  });

  timed("arfc~hatc", [&] {
    cl::ArfcParams ap;
    ap.n_models = 1;
    ap.disable_poisson = true;
    ap.features = cl::SubspaceMode::kAll;
    ap.tree.tie_threshold = 0.5;
    ap.seed = 99;
    cl::AdaptiveRandomForest forest(ap);
    cl::HatcParams hp = ap.tree;
    hp.seed = 99;
    cl::HoeffdingAdaptiveTree tree(hp);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
      const cs::NamedVector x{{"s", unit(rng)}, {"n1", unit(rng)}, {"n2", unit(rng)}};
      const auto y = x.at("s") < 0.5 ? cs::Label::kAbsent : cs::Label::kPresent;
      out.require(forest.predict(x) == tree.predict(x), "ARFC(1) and HATC disagree at " + std::to_string(i));
      forest.learn_one(x, y);
      tree.learn_one(x, y);
    }
  });
  if (out.pass) {
    for (const auto& t : timings) out.detail += (out.detail.empty() ? "" : ", ") + t;
  }
  return out;
}

cs::Corpus default_corpus(std::uint64_t seed) {
  cs::CorpusSpec spec;
  spec.seed = seed;
  return cs::generate_corpus(spec);
}

Outcome prequential_protocol() {
  Outcome out;
  const auto corpus = default_corpus(7);
  const auto sessions = corpus.dialogue_sessions();
  // Every step hashes a full checkpoint, so the forest is kept small here.
  const nlohmann::json small = {{"arfc", {{"n_models", 10}}}};
  {
    cs::RunConfig c;
    c.scenario = 1;
    c.model_overrides = small;
    auto transport = cs::make_fixture_transport(corpus);
    ct::HashProbe probe;
    cs::run_stream(sessions, c, *transport, &probe);
    out.require(probe.trainings.size() == sessions.size(), "scenario 1 skipped a training step");
    for (std::size_t i = 0; i < probe.trainings.size() && out.pass; ++i) {
      const auto& tr = probe.trainings[i];
      out.require(tr.count == static_cast<std::int64_t>(i + 1) &&
                      tr.samples == std::vector<std::int64_t>{tr.count},
                  "scenario 1 trained on the wrong sample at " + std::to_string(i + 1));
      if (i + 1 < probe.predict_hashes.size()) {
        out.require(probe.predict_hashes[i + 1] == tr.hash_after,
                    "model changed between training and the next prediction");
      }
    }
  }
  {
    cs::RunConfig c;
    c.scenario = 2;
    c.model_overrides = small;
    auto transport = cs::make_fixture_transport(corpus);
    ct::HashProbe probe;
    cs::run_stream(sessions, c, *transport, &probe);
    out.require(probe.mutation_counts() == std::vector<std::int64_t>{100, 200, 300, 400, 500, 600},
                "scenario 2 mutated the model off the block boundaries");
    out.require(probe.trainings.size() == 6, "scenario 2 did not train six blocks");
    for (const auto& tr : probe.trainings) {
      out.require(tr.count % 100 == 0 && tr.action == cs::TrainAction::kTrainBlock, "block at wrong count");
      out.require(tr.samples.size() == 100, "block is not 100 samples");
      for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        out.require(tr.samples[i] == tr.count - 99 + static_cast<std::int64_t>(i),
                    "block is not the last 100 samples in order");
      }
    }
  }
  if (out.pass) out.detail = "601 sessions, S1 every step, S2 at 100..600";
  return out;
}

Outcome metrics_every_prefix() {
  Outcome out;
  const auto corpus = default_corpus(11);
  const auto sessions = corpus.dialogue_sessions();
  auto transport = cs::make_fixture_transport(corpus);
  cs::Pipeline p(cs::RunConfig{}, sessions.size());
  std::vector<std::pair<cs::Label, cs::Label>> pairs;
  for (const auto& s : sessions) {
    const auto r = p.process_session(s, *transport);
    out.require(r.has_value(), "session quarantined");
    if (!r) break;
    pairs.emplace_back(*r->truth, r->predicted);
    const auto o = ct::oracle_metrics(pairs);
    const auto& m = p.metrics();
    out.require(m.accuracy == o.accuracy && m.precision_present == o.precision_present &&
                    m.precision_absent == o.precision_absent && m.precision_macro == o.precision_macro &&
                    m.recall_present == o.recall_present && m.recall_absent == o.recall_absent &&
                    m.recall_macro == o.recall_macro,
                "metrics differ at prefix " + std::to_string(pairs.size()));
  }
  out.require(pairs.size() == 601, "expected 601 records");
  if (out.pass) out.detail = "601 prefixes, 7 metrics each";
  return out;
}

Outcome end_to_end_smoke() {
  Outcome out;
  double acc = 0, recall = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto corpus = default_corpus(seed);
    auto transport = cs::make_fixture_transport(corpus);
    cs::RunConfig c;
    const auto r = cs::run_stream(corpus.dialogue_sessions(), c, *transport);
    acc += r.metrics.accuracy / 5;
    recall += r.metrics.recall_present / 5;
    per_seed += fmt(" %.3f", r.metrics.accuracy);
  }
  const double majority = 363.0 / 601.0;
  out.require(acc >= majority + 0.10, "accuracy " + fmt("%.3f", acc) + " below baseline+10");
  out.require(recall >= 0.70, "present recall " + fmt("%.3f", recall) + " below 0.70");
  out.detail = "accuracy " + fmt("%.3f", acc) + " (need " + fmt("%.3f", majority + 0.10) +
               "), present recall " + fmt("%.3f", recall) + ", per seed" + per_seed;
  return out;
}

Outcome service_durability() {
  Outcome out;
  const auto s1 = ct::durability_check("acc-s1", 50, 50, 1, 100, 100);
  out.require(s1.state_restored, "scenario 1 state differs after restart");
  out.require(s1.continuation_identical, "scenario 1 continuation differs");
  // Block training leaves un-snapshotted events to replay after the restart.
  const auto s2 = ct::durability_check("acc-s2", 50, 50, 2, 20, 100);
  out.require(s2.state_restored, "scenario 2 state differs after restart");
  out.require(s2.continuation_identical, "scenario 2 continuation differs");
  if (out.pass) out.detail = "50 + 50 sessions, scenarios 1 and 2, records bit-identical";
  return out;
}

Outcome corpus_statistics() {
  Outcome out;
  double conv = 0, utt = 0, words = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto st = cs::corpus_stats(default_corpus(seed));
    out.require(st.present == 238 && st.absent == 363, "label counts differ for seed " + std::to_string(seed));
    conv += st.conversations_mean / 20;
    utt += st.utterances_mean / 20;
    words += st.words_mean / 20;
  }
  out.require(std::abs(conv - 13.66) <= 1.5, "conversations " + fmt("%.2f", conv));
  out.require(std::abs(utt - 6.92) <= 0.5, "utterances " + fmt("%.2f", utt));
  out.require(std::abs(words - 62.73) <= 10, "words " + fmt("%.2f", words));
  out.detail = "conversations " + fmt("%.2f", conv) + ", utterances " + fmt("%.2f", utt) +
               ", words " + fmt("%.2f", words) + ", labels 238/363 on all 20 seeds";
  return out;
}

struct Criterion {
  const char* name;
  double limit_seconds;  // 0 = no limit
  Outcome (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"history statistics match the sort-and-index oracle", 5.0, history_oracle},
      {"extraction contract", 0, extraction_contract},
      {"selector correctness", 0, selector_correctness},
      {"learner oracles", 0, learner_oracles},
      {"prequential protocol", 0, prequential_protocol},
      {"metrics at every prefix", 0, metrics_every_prefix},
      {"end-to-end smoke", 300.0, end_to_end_smoke},
      {"service durability", 0, service_durability},
      {"synthetic corpus statistics", 0, corpus_statistics},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double s = seconds_since(start);
    if (c.limit_seconds > 0 && s >= c.limit_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt("%.0f", c.limit_seconds) + " s limit)";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << " ["
              << fmt("%.2f", s) << " s]" << std::endl;
  }
  std::cout << (failures ? "acceptance: FAILED" : "acceptance: all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
