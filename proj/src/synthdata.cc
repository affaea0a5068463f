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

#include "cogstream/synthdata.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace cogstream {

namespace {

// Plain vocabulary for filler transcripts. Deliberately free of farewell
// phrases so that no synthetic turn closes a session early.
constexpr std::array<std::string_view, 64> kVocabulary = {
    "the",    "garden",  "morning", "tea",     "walk",    "my",
    "daughter", "called", "today",  "weather", "nice",    "remember",
    "market", "bread",   "I",       "think",   "yes",     "no",
    "maybe",  "radio",   "news",    "friend",  "church",  "dinner",
    "soup",   "cold",    "warm",    "sleep",   "doctor",  "pills",
    "kitchen", "window", "birds",   "flowers", "neighbor", "visited",
    "book",   "reading", "song",    "old",     "house",   "village",
    "cousin", "letter",  "photo",   "wedding", "young",   "school",
    "work",   "years",   "ago",     "little",  "tired",   "happy",
    "quiet",  "afternoon", "park",  "bench",   "dog",     "cat",
    "coffee", "sugar",   "chair",   "shoes"};

constexpr std::array<std::string_view, 8> kBotLines = {
    "Hello, how are you today?",
    "What did you do this morning?",
    "Tell me more about that.",
    "How did you sleep last night?",
    "Have you talked to your family recently?",
    "What would you like to do this afternoon?",
    "Do you remember what you had for breakfast?",
    "That sounds interesting, go on."};

struct SessionPlan {
  int user = 0;
  Label label = Label::kAbsent;
  std::int64_t start = 0;
};

double normal(std::mt19937_64& rng, double mean, double sd) {
  if (sd == 0.0) return mean;
  return std::normal_distribution<double>(mean, sd)(rng);
}

std::string user_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%02d", index);
  return buf;
}

std::string session_name(const std::string& user, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "-s%03d", index);
  return user + buf;
}

// Per-user session counts from the truncated normal, then nudged one at a
// time (never below 1) until they sum to the requested total.
std::vector<int> draw_conversation_counts(const CorpusSpec& spec,
                                          std::mt19937_64& rng) {
  std::vector<int> counts(static_cast<std::size_t>(spec.n_users));
  for (auto& c : counts) {
    c = std::max(1, static_cast<int>(std::lround(
                        normal(rng, spec.conversations_mean, spec.conversations_sd))));
  }
  std::uniform_int_distribution<std::size_t> pick(0, counts.size() - 1);
  int total = std::accumulate(counts.begin(), counts.end(), 0);
  while (total > spec.total_sessions()) {
    auto& c = counts[pick(rng)];
    if (c > 1) {
      --c;
      --total;
    }
  }
  while (total < spec.total_sessions()) {
    ++counts[pick(rng)];
    ++total;
  }
  return counts;
}

std::vector<Utterance> make_transcript(int pairs, int words, std::int64_t start,
                                       std::mt19937_64& rng) {
  std::vector<int> per_turn(static_cast<std::size_t>(pairs), 1);
  std::uniform_int_distribution<std::size_t> turn(0, per_turn.size() - 1);
  for (int w = pairs; w < words; ++w) ++per_turn[turn(rng)];

  std::uniform_int_distribution<std::size_t> word(0, kVocabulary.size() - 1);
  std::uniform_int_distribution<std::size_t> bot(0, kBotLines.size() - 1);
  std::uniform_int_distribution<int> gap(10, 40);

  std::vector<Utterance> out;
  out.reserve(per_turn.size() * 2);
  std::int64_t t = start;
  for (int n : per_turn) {
    out.push_back({Speaker::kBot, std::string(kBotLines[bot(rng)]),
                   from_epoch_seconds(t)});
    t += gap(rng);
    std::string text;
    for (int i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += kVocabulary[word(rng)];
    }
    out.push_back({Speaker::kHuman, std::move(text), from_epoch_seconds(t)});
    t += gap(rng);
  }
  return out;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// E[max(1, round(X))] for X ~ Normal(mean, sd).
double truncated_rounded_mean(double mean, double sd) {
  if (sd == 0.0) return std::max(1.0, std::round(mean));
  double e = normal_cdf(1.5, mean, sd);
  const int hi = static_cast<int>(mean + 10.0 * sd) + 2;
  for (int k = 2; k <= hi; ++k) {
    e += k * (normal_cdf(k + 0.5, mean, sd) - normal_cdf(k - 0.5, mean, sd));
  }
  return e;
}

// Location offset that makes the label mix of truncated, rounded pair counts
// average to the target.
double calibrate_pair_offset(const CorpusSpec& spec, const GenerationProfile& p,
                             double sd) {
  const double n = spec.total_sessions();
  const double wp = spec.present_sessions / n;
  const double wa = spec.absent_sessions / n;
  auto mixed = [&](double c) {
    return wp * truncated_rounded_mean(spec.pairs_mean + c + p.present_pair_shift, sd) +
           wa * truncated_rounded_mean(spec.pairs_mean + c + p.absent_pair_shift, sd);
  };
  double lo = -spec.pairs_mean, hi = spec.pairs_mean;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mixed(mid) < spec.pairs_mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void CorpusSpec::validate() const {
  if (n_users < 1) throw Error("corpus spec: n_users must be positive");
  if (present_sessions < 0 || absent_sessions < 0) {
    throw Error("corpus spec: label counts must be non-negative");
  }
  if (total_sessions() < n_users) {
    throw Error("corpus spec: fewer sessions than users");
  }
  if (conversations_sd < 0 || pairs_sd < 0) {
    throw Error("corpus spec: negative scale");
  }
  if (!(words_mean > 0) || !(pairs_mean > 0) || !(conversations_mean > 0)) {
    throw Error("corpus spec: means must be positive");
  }
  if (span_days < 1) throw Error("corpus spec: span_days must be positive");
}

GenerationProfile GenerationProfile::standard() {
  GenerationProfile p;
  p.shift_scale = 0.3;
  // Feature ids 1..8, 11..22 in reply-schema order.
  p.absent_means = {0.20, 0.15, 0.20, 0.20, 0.75, 0.60, 0.20, 0.20, 0.65, 0.30,
                    0.35, 0.60, 0.30, 0.50, 0.10, 0.20, 0.40, 0.15, 0.20, 0.30};
  p.present_shifts = {0.25, 0.15, 0.15, 0.25, -0.25, -0.25, 0.15, 0.05, -0.10, 0.10,
                      0.05, -0.05, 0.05, 0.00, 0.10, 0.15, -0.05, 0.10, -0.05, 0.20};
  return p;
}

std::vector<DialogueSession> Corpus::dialogue_sessions() const {
  std::vector<DialogueSession> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(s.session);
  return out;
}

Corpus generate_corpus(const CorpusSpec& spec, const GenerationProfile& profile) {
  spec.validate();
  if (profile.session_noise_sd < 0 || profile.user_offset_sd < 0 ||
      profile.user_word_log_sd < 0 || profile.user_pair_sd < 0) {
    throw Error("generation profile: negative scale");
  }
  std::mt19937_64 rng(spec.seed);

  const std::vector<int> counts = draw_conversation_counts(spec, rng);

  // Whole users are drawn into the 'present' group until the pool runs out;
  // the user that straddles the boundary converts mid-history.
  std::vector<int> order(static_cast<std::size_t>(spec.n_users));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> present_quota(order.size(), 0);
  int remaining = spec.present_sessions;
  for (int u : order) {
    const int take = std::min(remaining, counts[static_cast<std::size_t>(u)]);
    present_quota[static_cast<std::size_t>(u)] = take;
    remaining -= take;
  }

  const std::int64_t span = static_cast<std::int64_t>(spec.span_days) * 86400;
  std::uniform_int_distribution<std::int64_t> when(0, span - 1);
  std::vector<SessionPlan> plans;
  plans.reserve(static_cast<std::size_t>(spec.total_sessions()));
  for (int u = 0; u < spec.n_users; ++u) {
    const int n = counts[static_cast<std::size_t>(u)];
    std::vector<std::int64_t> starts(static_cast<std::size_t>(n));
    for (auto& s : starts) s = spec.start_epoch + when(rng);
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 1; i < starts.size(); ++i) {
      starts[i] = std::max(starts[i], starts[i - 1] + 3600);
    }
    const int quota = present_quota[static_cast<std::size_t>(u)];
    for (int i = 0; i < n; ++i) {
      // Later sessions are the deteriorated ones for a converting user.
      const Label label = i >= n - quota ? Label::kPresent : Label::kAbsent;
      plans.push_back({u, label, starts[static_cast<std::size_t>(i)]});
    }
  }

  std::vector<ReplyScores> user_offsets(static_cast<std::size_t>(spec.n_users));
  for (auto& offsets : user_offsets) {
    for (auto& o : offsets) o = normal(rng, 0.0, profile.user_offset_sd);
  }

  std::vector<double> user_word_factor(static_cast<std::size_t>(spec.n_users));
  std::vector<double> user_pair_offset(static_cast<std::size_t>(spec.n_users));
  const double log_sd = profile.user_word_log_sd;
  for (int u = 0; u < spec.n_users; ++u) {
    user_word_factor[static_cast<std::size_t>(u)] =
        std::exp(normal(rng, -0.5 * log_sd * log_sd, log_sd));
    user_pair_offset[static_cast<std::size_t>(u)] = normal(rng, 0.0, profile.user_pair_sd);
  }

  // The per-user offset takes its share of the overall pair spread.
  const double pair_sd = std::sqrt(std::max(
      0.0, spec.pairs_sd * spec.pairs_sd - profile.user_pair_sd * profile.user_pair_sd));
  const double pair_offset = calibrate_pair_offset(spec, profile, spec.pairs_sd);

  const double word_sigma = spec.words_mean * std::sqrt(M_PI / 2.0);
  std::vector<int> next_index(static_cast<std::size_t>(spec.n_users), 0);
  Corpus corpus;
  corpus.sessions.reserve(plans.size());
  for (const auto& plan : plans) {
    const bool present = plan.label == Label::kPresent;
    const double pair_mean =
        spec.pairs_mean + pair_offset + user_pair_offset[static_cast<std::size_t>(plan.user)] +
        (present ? profile.present_pair_shift : profile.absent_pair_shift);
    const int pairs =
        std::max(1, static_cast<int>(std::lround(normal(rng, pair_mean, pair_sd))));
    const double scale = present ? profile.present_word_scale : profile.absent_word_scale;
    const double raw_words = std::abs(normal(rng, 0.0, word_sigma)) * scale *
                             user_word_factor[static_cast<std::size_t>(plan.user)];
    const int words = std::max(pairs, static_cast<int>(std::lround(raw_words)));

    SyntheticSession s;
    s.session.user_id = user_name(plan.user);
    s.session.session_id =
        session_name(s.session.user_id, next_index[static_cast<std::size_t>(plan.user)]++);
    s.session.utterances = make_transcript(pairs, words, plan.start, rng);
    s.session.closed = true;
    s.session.label = plan.label;

    const auto& offsets = user_offsets[static_cast<std::size_t>(plan.user)];
    for (std::size_t k = 0; k < s.stub_scores.size(); ++k) {
      double v = profile.absent_means[k] + offsets[k] +
                 normal(rng, 0.0, profile.session_noise_sd);
      if (present) v += profile.shift_scale * profile.present_shifts[k];
      v = std::clamp(v, 0.0, 1.0);
      s.stub_scores[k] = std::round(v * 100.0) / 100.0;
    }
    corpus.sessions.push_back(std::move(s));
  }

  std::stable_sort(corpus.sessions.begin(), corpus.sessions.end(),
                   [](const SyntheticSession& a, const SyntheticSession& b) {
                     const auto ta = a.session.utterances.front().timestamp;
                     const auto tb = b.session.utterances.front().timestamp;
                     if (ta != tb) return ta < tb;
                     return a.session.session_id < b.session.session_id;
                   });
  return corpus;
}

nlohmann::json CorpusStats::to_json() const {
  return {{"users", users},
          {"sessions", sessions},
          {"conversations_per_user", {{"mean", conversations_mean}, {"sd", conversations_sd}}},
          {"utterances", {{"mean", utterances_mean},
                          {"sd", utterances_sd},
                          {"mean_present", utterances_mean_present},
                          {"mean_absent", utterances_mean_absent}}},
          {"words", {{"mean", words_mean},
                     {"sd", words_sd},
                     {"mean_present", words_mean_present},
                     {"mean_absent", words_mean_absent}}},
          {"labels", {{"present", present}, {"absent", absent}, {"unlabeled", unlabeled}}}};
}

CorpusStats corpus_stats(const std::vector<DialogueSession>& corpus) {
  if (corpus.empty()) throw Error("corpus_stats: empty corpus");
  std::map<std::string, double> per_user;
  std::vector<double> utterances, words;
  std::vector<double> utt_present, utt_absent, words_present, words_absent;
  CorpusStats st;
  for (const auto& s : corpus) {
    per_user[s.user_id] += 1.0;
    const auto u = static_cast<double>(count_human_interactions(s));
    const auto w = static_cast<double>(count_words(s));
    utterances.push_back(u);
    words.push_back(w);
    if (!s.label) {
      ++st.unlabeled;
    } else if (*s.label == Label::kPresent) {
      ++st.present;
      utt_present.push_back(u);
      words_present.push_back(w);
    } else {
      ++st.absent;
      utt_absent.push_back(u);
      words_absent.push_back(w);
    }
  }
  std::vector<double> conversations;
  for (const auto& [user, n] : per_user) conversations.push_back(n);
  st.users = per_user.size();
  st.sessions = corpus.size();
  st.conversations_mean = mean_of(conversations);
  st.conversations_sd = sd_of(conversations);
  st.utterances_mean = mean_of(utterances);
  st.utterances_sd = sd_of(utterances);
  st.words_mean = mean_of(words);
  st.words_sd = sd_of(words);
  st.utterances_mean_present = mean_of(utt_present);
  st.utterances_mean_absent = mean_of(utt_absent);
  st.words_mean_present = mean_of(words_present);
  st.words_mean_absent = mean_of(words_absent);
  return st;
}

nlohmann::json session_to_json(const DialogueSession& session) {
  nlohmann::json utterances = nlohmann::json::array();
  for (const auto& u : session.utterances) {
    utterances.push_back({{"speaker", speaker_name(u.speaker)},
                          {"text", u.text},
                          {"t", to_epoch_seconds(u.timestamp)}});
  }
  nlohmann::json j = {{"user_id", session.user_id},
                      {"session_id", session.session_id},
                      {"utterances", std::move(utterances)}};
  j["label"] = session.label ? nlohmann::json(label_name(*session.label))
                             : nlohmann::json(nullptr);
  return j;
}

DialogueSession session_from_json(const nlohmann::json& j) {
  DialogueSession s;
  s.user_id = j.at("user_id").get<std::string>();
  s.session_id = j.at("session_id").get<std::string>();
  for (const auto& u : j.at("utterances")) {
    s.utterances.push_back({parse_speaker(u.at("speaker").get<std::string>()),
                            u.at("text").get<std::string>(),
                            from_epoch_seconds(u.at("t").get<std::int64_t>())});
  }
  if (j.contains("label") && !j["label"].is_null()) {
    s.label = parse_label(j["label"].get<std::string>());
  }
  s.closed = true;
  s.validate();
  return s;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sessions) {
    auto j = session_to_json(s.session);
    nlohmann::json scores = nlohmann::json::object();
    const auto& ids = scored_feature_ids();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      scores[std::string(feature_info(ids[k]).reply_key)] = s.stub_scores[k];
    }
    j["stub_scores"] = std::move(scores);
    out << j.dump() << '\n';
  }
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SyntheticSession s;
      s.session = session_from_json(j);
      if (j.contains("stub_scores")) {
        s.stub_scores = parse_extraction_response(j["stub_scores"].dump());
      }
      corpus.sessions.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

void write_fixtures(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sessions) {
    out << fixture_line(sha256_hex(build_extraction_prompt(s.session)),
                        serialize_scores(s.stub_scores))
        << '\n';
  }
}

std::unique_ptr<FixtureReplayTransport> make_fixture_transport(
    const Corpus& corpus, TransportOptions options) {
  auto transport = std::make_unique<FixtureReplayTransport>(options);
  for (const auto& s : corpus.sessions) {
    transport->add(sha256_hex(build_extraction_prompt(s.session)),
                   serialize_scores(s.stub_scores));
  }
  return transport;
}

}  // namespace cogstream
