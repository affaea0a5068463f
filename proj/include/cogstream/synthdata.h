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

#ifndef COGSTREAM_SYNTHDATA_H_
#define COGSTREAM_SYNTHDATA_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cogstream/extraction.h"
#include "cogstream/transport.h"
#include "json.hpp"

namespace cogstream {

struct CorpusSpec {
  int n_users = 44;
  double conversations_mean = 13.66;
  double conversations_sd = 7.86;
  double pairs_mean = 6.92;
  double pairs_sd = 3.08;
  double words_mean = 62.73;
  int present_sessions = 238;
  int absent_sessions = 363;
  std::uint64_t seed = 7;
  std::int64_t start_epoch = 1704067200;  // 2024-01-01T00:00:00Z
  int span_days = 120;

  int total_sessions() const { return present_sessions + absent_sessions; }
  // Throws Error for an infeasible spec.
  void validate() const;
};

// How the 'present' label moves the generated observables. The score tables
// are artificial: the real per-feature distributions are unpublished.
struct GenerationProfile {
  double present_pair_shift = -1.0;
  double absent_pair_shift = 0.66;
  double present_word_scale = 0.75;
  double absent_word_scale = 1.16;
  // Per-user talkativeness: a mean-one log-normal factor on words and a
  // zero-mean offset on utterance pairs.
  double user_word_log_sd = 0.3;
  double user_pair_sd = 1.0;
  // Indexed like ReplyScores (scored_feature_ids() order).
  ReplyScores absent_means{};
  ReplyScores present_shifts{};
  double shift_scale = 1.0;
  double session_noise_sd = 0.15;
  double user_offset_sd = 0.05;

  static GenerationProfile standard();
};

struct SyntheticSession {
  DialogueSession session;
  ReplyScores stub_scores{};
};

struct Corpus {
  std::vector<SyntheticSession> sessions;  // in arrival order

  std::vector<DialogueSession> dialogue_sessions() const;
};

Corpus generate_corpus(const CorpusSpec& spec,
                       const GenerationProfile& profile = GenerationProfile::standard());

struct CorpusStats {
  std::size_t users = 0;
  std::size_t sessions = 0;
  double conversations_mean = 0.0;
  double conversations_sd = 0.0;
  double utterances_mean = 0.0;  // human turns per session
  double utterances_sd = 0.0;
  double words_mean = 0.0;
  double words_sd = 0.0;
  std::int64_t present = 0;
  std::int64_t absent = 0;
  std::int64_t unlabeled = 0;
  double utterances_mean_present = 0.0;
  double utterances_mean_absent = 0.0;
  double words_mean_present = 0.0;
  double words_mean_absent = 0.0;

  nlohmann::json to_json() const;
};

// Sample standard deviations use n - 1 (0 for a single observation).
CorpusStats corpus_stats(const std::vector<DialogueSession>& corpus);
inline CorpusStats corpus_stats(const Corpus& corpus) {
  return corpus_stats(corpus.dialogue_sessions());
}

nlohmann::json session_to_json(const DialogueSession& session);
DialogueSession session_from_json(const nlohmann::json& j);

void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);
Corpus read_corpus_file(const std::string& path);

// One {"prompt_hash", "reply_text"} line per session.
void write_fixtures(std::ostream& out, const Corpus& corpus);
// Replay transport answering every session of the corpus with its stub scores.
std::unique_ptr<FixtureReplayTransport> make_fixture_transport(
    const Corpus& corpus, TransportOptions options = {});

}  // namespace cogstream

#endif  // COGSTREAM_SYNTHDATA_H_
