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

#include <algorithm>

#include "cogstream/explain.h"
#include "oracles.h"

namespace cogstream {
namespace {

// Independent scorer: every slot against its reference, sorted with the
// documented tie rules.
std::vector<std::string> oracle_top(const ExpandedFeatureVector& x, const UserHistory& h,
                                    const PopulationStats& pop, std::size_t k) {
  struct Scored {
    double rel, absval;
    std::string slot;
  };
  std::vector<Scored> all;
  for (const auto& name : slot_names()) {
    const auto ref = *parse_slot_name(name);
    const double v = x.at(name);
    double rel;
    if (is_counter_feature(ref.feature_id)) {
      const double range = pop.max(ref.feature_id) - pop.min(ref.feature_id);
      rel = range > 0 ? std::abs(v - pop.mean(ref.feature_id)) / range : 0.0;
    } else {
      rel = std::abs(v - testing::oracle_mean(h.series(ref.feature_id)));
    }
    all.push_back({rel, std::abs(v), name});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (std::abs(a.rel - b.rel) > 1e-12) return a.rel > b.rel;
    if (a.absval != b.absval) return a.absval > b.absval;
    return a.slot < b.slot;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].slot);
  return out;
}

std::vector<std::string> slots_of(const std::vector<ExplanationItem>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.slot);
  return out;
}

PredictionRecord record_at(const std::string& user, std::int64_t t, double p) {
  PredictionRecord r;
  r.user_id = user;
  r.session_id = user + "-" + std::to_string(t);
  r.timestamp = from_epoch_seconds(t);
  r.probabilities = {p, 1.0 - p};
  return r;
}

TEST(TopFeatures, TwoDeviatingSlotsRankFirst) {
  UserHistory h("u");
  PopulationStats pop;
  const auto base = testing::uniform_features(0.5, 4, 40);
  for (int i = 0; i < 9; ++i) {
    h.append(base);
    pop.update(base);
  }
  auto current = base;
  current.set(6, 0.5 + 0.4 / 0.9);
  current.set(14, 0.5 + 0.3 / 0.9);
  h.append(current);
  pop.update(current);
  const auto x = expand(h, current);
  const auto items = select_top_features(x, h, pop);
  ASSERT_EQ(items.size(), 5u);
  EXPECT_EQ(items[0].slot, "f6.current");
  EXPECT_NEAR(items[0].deviation, 0.4, 1e-12);
  EXPECT_EQ(items[1].slot, "f14.current");
  EXPECT_NEAR(items[1].deviation, 0.3, 1e-12);

  // The remaining slots only move with the shifted average.
  for (std::size_t i = 2; i < items.size(); ++i) EXPECT_LT(items[i].relevance, 0.05);
  EXPECT_EQ(slots_of(items), oracle_top(x, h, pop, 5));
  for (std::size_t i = 1; i < items.size(); ++i) EXPECT_GE(items[i - 1].relevance, items[i].relevance);
}

TEST(TopFeatures, FirstSessionCountersRankFirst) {
  PopulationStats pop;
  pop.update(testing::uniform_features(0.2, 2, 10));
  pop.update(testing::uniform_features(0.9, 12, 300));
  UserHistory h("new");
  const auto v = testing::uniform_features(0.6, 3, 200);
  h.append(v);
  pop.update(v);
  const auto items = select_top_features(expand(h, v), h, pop);
  for (const auto& item : items) {
    EXPECT_TRUE(item.counter()) << item.slot;
    EXPECT_GT(item.relevance, 0.0);
  }
  // Interactions: |3 - 17/3| / 10; words: |200 - 170| / 290.
  EXPECT_EQ(items[0].feature_id, kInteractionsFeature);
  EXPECT_NEAR(items[0].relevance, (17.0 / 3.0 - 3.0) / 10.0, 1e-12);
  EXPECT_NEAR(items[0].display_value, 0.1, 1e-12);
  EXPECT_EQ(slots_of(items), oracle_top(expand(h, v), h, pop, 5));
  EXPECT_NE(items[0].description.find("typical population level"), std::string::npos);
}

TEST(TopFeatures, ExactlyFiveDeviatingSlotsInOrder) {
  UserHistory h("u");
  PopulationStats pop;
  const auto base = testing::uniform_features(0.5, 4, 40);
  for (int i = 0; i < 9; ++i) {
    h.append(base);
    pop.update(base);
  }
  auto current = base;
  const std::vector<std::pair<int, double>> devs{{3, 0.45}, {5, -0.40}, {12, 0.30}, {17, -0.2}, {21, 0.1}};
  for (const auto& [id, d] : devs) current.set(id, 0.5 + d / 0.9);
  h.append(current);
  pop.update(current);
  const auto items = select_top_features(expand(h, current), h, pop);
  EXPECT_EQ(slots_of(items), (std::vector<std::string>{"f3.current", "f5.current", "f12.current",
                                           "f17.current", "f21.current"}));
  EXPECT_EQ(select_top_features(expand(h, current), h, pop, 200).size(), 110u);
  EXPECT_THROW(select_top_features(expand(h, current), UserHistory("x"), pop), Error);
}

TEST(TopFeatures, TiesPreferLargerValueThenName) {
  UserHistory h("u");
  PopulationStats pop;
  const auto v = testing::uniform_features(0.5, 4, 40);
  h.append(v);
  pop.update(v);
  // All relevances are zero, so every item ties; larger |value| wins (the
  // counters), then slot name.
  const auto items = select_top_features(expand(h, v), h, pop, 7);
  EXPECT_EQ(items[0].slot, "f10.avg");
  EXPECT_EQ(items[1].slot, "f10.current");
  EXPECT_EQ(items[5].slot, "f9.avg");
  EXPECT_EQ(items[6].slot, "f9.current");
}

TEST(ColorBand, Bands) {
  EXPECT_EQ(color_band(0.8), Color::kGreen);
  EXPECT_EQ(color_band(0.3), Color::kYellow);
  EXPECT_EQ(color_band(-0.1), Color::kRed);
  EXPECT_EQ(color_band(0.5), Color::kYellow);
  EXPECT_EQ(color_band(0.25), Color::kRed);
  EXPECT_EQ(color_band(-0.75), Color::kGreen);
  EXPECT_EQ(color_band(7.0), Color::kGreen);
  EXPECT_EQ(color_band(std::nextafter(0.5, 1.0)), Color::kGreen);
  EXPECT_EQ(color_band(std::nextafter(0.25, 1.0)), Color::kYellow);
}

TEST(Describe, TemplateExamples) {
  ExplanationItem item;
  item.feature_id = 6;
  item.stat = Statistic::kCurrent;
  item.slot = "f6.current";
  item.value = 0.1;
  item.reference = 0.6;
  item.deviation = item.value - item.reference;
  const std::string text = describe(item);
  EXPECT_EQ(text, "Initiative (current) is far below the user's typical level (0.10 vs 0.60)");
  EXPECT_EQ(describe(item), text);

  item.value = item.reference = 0.6;
  item.deviation = 0.0;
  EXPECT_EQ(describe(item), "Initiative (current) is near the user's typical level (0.60 vs 0.60)");

  item.value = 0.95;
  item.deviation = 0.35;
  item.stat = Statistic::kQ2;
  item.slot = "f6.q2";
  EXPECT_EQ(describe(item), "Initiative (q2) is above the user's typical level (0.95 vs 0.60)");

  ExplanationItem words;
  words.feature_id = kWordsFeature;
  words.stat = Statistic::kAvg;
  words.slot = "f10.avg";
  words.value = 12;
  words.reference = 60;
  words.deviation = -0.3;
  EXPECT_EQ(describe(words), "Words (avg) is below the typical population level (12.00 vs 60.00)");

  // Serialization round trip keeps the text.
  item.color = color_band(item.value);
  item.description = describe(item);
  const auto back = explanation_item_from_json(to_json(item));
  EXPECT_EQ(describe(back), item.description);
}

TEST(Trajectory, WindowFilter) {
  const std::int64_t day = 86400;
  const std::int64_t now = 100 * day;
  std::vector<PredictionRecord> rs{record_at("u", now - 20 * day, 0.1), record_at("v", now - 5 * day, 0.3),
                                   record_at("u", now - 10 * day, 0.2), record_at("u", now - day, 0.4)};
  const auto pts = trajectory("u", kTwoWeeks, rs, from_epoch_seconds(now));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(to_epoch_seconds(pts[0].timestamp), now - 10 * day);
  EXPECT_EQ(to_epoch_seconds(pts[1].timestamp), now - day);
  EXPECT_TRUE(trajectory("u", std::chrono::seconds(3600), rs, from_epoch_seconds(now)).empty());
  EXPECT_EQ(trajectory("u", std::nullopt, rs, from_epoch_seconds(now)).size(), 3u);
  EXPECT_TRUE(trajectory("nobody", kTwoWeeks, rs, from_epoch_seconds(now)).empty());
}

TEST(Accumulated, MeanAndCurrent) {
  std::vector<PredictionRecord> rs{record_at("u", 1, 0.2), record_at("u", 2, 0.4), record_at("u", 3, 0.9)};
  const auto a = accumulated_confidence("u", rs);
  EXPECT_NEAR(a.mean, 0.5, 1e-12);
  EXPECT_EQ(a.current, 0.9);
  const auto single = accumulated_confidence("u", {record_at("u", 1, 0.7)});
  EXPECT_EQ(single.mean, 0.7);
  EXPECT_EQ(single.current, 0.7);
  EXPECT_THROW(accumulated_confidence("x", rs), Error);

  rs.push_back(record_at("u", 4, 0.1));
  EXPECT_NEAR(accumulated_confidence("u", rs).mean, a.mean + (0.1 - a.mean) / 4, 1e-12);
}

TEST(Payload, Shape) {
  ExplanationItem item;
  item.feature_id = 6;
  item.stat = Statistic::kAvg;
  item.slot = "f6.avg";
  item.value = 0.8;
  item.display_value = 0.8;
  item.color = Color::kGreen;
  item.description = "d";
  const auto j = explanation_payload({item}, {{from_epoch_seconds(5), 0.25, "s"}}, AccumulatedConfidence{0.3, 0.25});
  EXPECT_EQ(j["items"][0]["slot"], "f6.avg");
  EXPECT_EQ(j["items"][0]["statistic"], "avg");
  EXPECT_EQ(j["items"][0]["color"], "green");
  EXPECT_EQ(j["trajectory"][0]["t"], 5);
  EXPECT_EQ(j["trajectory"][0]["p"], 0.25);
  EXPECT_EQ(j["accumulated"]["mean"], 0.3);
  EXPECT_TRUE(explanation_payload({}, {}, std::nullopt)["accumulated"].is_null());
}

}  // namespace
}  // namespace cogstream
