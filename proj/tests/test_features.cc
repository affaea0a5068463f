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

#include <random>

#include "cogstream/features.h"
#include "oracles.h"

namespace cogstream {
namespace {

BaseFeatureVector with_feature(int id, double value) {
  BaseFeatureVector v = testing::uniform_features(0.5, 3, 30);
  v.set(id, value);
  return v;
}

TEST(SlotNames, RoundTripAndIndexing) {
  const auto& names = slot_names();
  ASSERT_EQ(names.size(), 110u);
  EXPECT_EQ(names[0], "f1.current");
  EXPECT_EQ(names[109], "f22.q3");
  EXPECT_EQ(slot_name(6, Statistic::kQ3), "f6.q3");
  for (int i = 0; i < kNumExpandedSlots; ++i) {
    const auto ref = parse_slot_name(names[static_cast<std::size_t>(i)]);
    ASSERT_TRUE(ref.has_value());
    EXPECT_EQ(slot_index(ref->feature_id, ref->stat), i);
  }
  EXPECT_FALSE(parse_slot_name("f23.avg").has_value());
  EXPECT_FALSE(parse_slot_name("f6.median").has_value());
  EXPECT_FALSE(parse_slot_name("x6.avg").has_value());
  EXPECT_FALSE(parse_slot_name("f06.avg").has_value());
}

TEST(History, AppendSemantics) {
  UserHistory h("u");
  EXPECT_TRUE(h.empty());
  const auto v = with_feature(3, 0.7);
  h.append(v);
  EXPECT_EQ(h.size(), 1u);
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    EXPECT_EQ(h.series(f), std::vector<double>{v.at(f)});
  }
  for (int i = 0; i < 3; ++i) h.append(v);
  h.append(with_feature(3, 0.1));
  EXPECT_EQ(h.size(), 5u);
  h.append(v);
  h.append(v);
  const auto& s = h.series(3);
  EXPECT_EQ(s[s.size() - 1], s[s.size() - 2]);
}

TEST(History, RunningAverageAndQuartileExamples) {
  UserHistory h("u");
  for (double x : {0.1, 0.3, 0.5, 0.7}) h.append(with_feature(6, x));
  EXPECT_NEAR(h.running_average(6), 0.4, 1e-12);
  EXPECT_EQ(h.quartile(6, 1), 0.3);
  EXPECT_EQ(h.quartile(6, 2), 0.5);
  EXPECT_EQ(h.quartile(6, 3), 0.7);

  UserHistory single("u");
  single.append(with_feature(6, 0.9));
  EXPECT_EQ(single.running_average(6), 0.9);
  EXPECT_EQ(single.quartile(6, 3), 0.9);

  UserHistory constant("u");
  for (int i = 0; i < 5; ++i) constant.append(with_feature(6, 0.8));
  EXPECT_NEAR(constant.running_average(6), 0.8, 1e-15);
  for (int q = 1; q <= 3; ++q) EXPECT_EQ(constant.quartile(6, q), 0.8);
}

TEST(History, MatchesBruteForceOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 50);
  for (int trial = 0; trial < 300; ++trial) {
    UserHistory h("u");
    const int n = len(rng);
    for (int i = 0; i < n; ++i) h.append(testing::random_features(rng));
    for (int f = 1; f <= kNumBaseFeatures; ++f) {
      const auto& s = h.series(f);
      EXPECT_EQ(h.running_average(f), testing::oracle_mean(s));
      for (int q = 1; q <= 3; ++q) EXPECT_EQ(h.quartile(f, q), testing::oracle_quartile(s, q));
    }
  }
}

TEST(History, JsonRoundTrip) {
  std::mt19937_64 rng(9);
  UserHistory h("alice");
  for (int i = 0; i < 7; ++i) h.append(testing::random_features(rng));
  const auto back = UserHistory::from_json(h.to_json());
  EXPECT_EQ(back.user_id(), "alice");
  EXPECT_EQ(back.to_json(), h.to_json());
  EXPECT_EQ(back.quartile(4, 2), h.quartile(4, 2));
}

TEST(Expand, SingletonHistoryCollapses) {
  UserHistory h("u");
  std::mt19937_64 rng(1);
  const auto v = testing::random_features(rng);
  h.append(v);
  const auto x = expand(h, v);
  EXPECT_EQ(x.size(), 110);
  for (int f = 1; f <= kNumBaseFeatures; ++f) {
    for (int s = 0; s < kNumStatistics; ++s) EXPECT_EQ(x.at(f, Statistic(s)), v.at(f));
  }
}

TEST(Expand, ComposesHistoryStatistics) {
  UserHistory h("u");
  BaseFeatureVector last;
  for (double x : {0.1, 0.3, 0.5, 0.7}) {
    last = with_feature(6, x);
    h.append(last);
  }
  const auto x = expand(h, last);
  EXPECT_EQ(x.at("f6.current"), 0.7);
  EXPECT_NEAR(x.at("f6.avg"), 0.4, 1e-12);
  EXPECT_EQ(x.at("f6.q1"), 0.3);
  EXPECT_EQ(x.at("f6.q2"), 0.5);
  EXPECT_EQ(x.at("f6.q3"), 0.7);
  EXPECT_THROW(x.at("f99.avg"), Error);
  EXPECT_EQ(x.to_named().size(), 110u);
  EXPECT_THROW(expand(UserHistory("v"), last), Error);
}

TEST(Population, MeansAndRange) {
  PopulationStats p;
  for (double w : {10.0, 20.0, 30.0}) p.update(testing::uniform_features(0.5, 5, w));
  EXPECT_EQ(p.count(), 3);
  EXPECT_NEAR(p.mean(kWordsFeature), 20.0, 1e-12);
  EXPECT_NEAR(p.mean(kInteractionsFeature), 5.0, 1e-12);
  EXPECT_EQ(p.min(kWordsFeature), 10.0);
  EXPECT_EQ(p.max(kWordsFeature), 30.0);

  PopulationStats first;
  first.update(testing::uniform_features(0.5, 5, 1));
  EXPECT_EQ(first.mean(kInteractionsFeature), 5.0);

  PopulationStats reversed;
  for (double w : {30.0, 20.0, 10.0}) reversed.update(testing::uniform_features(0.5, 5, w));
  EXPECT_NEAR(reversed.mean(kWordsFeature), p.mean(kWordsFeature), 1e-12);

  const auto back = PopulationStats::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
}

}  // namespace
}  // namespace cogstream
