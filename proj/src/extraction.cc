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

#include "cogstream/extraction.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace cogstream {
namespace {

constexpr std::array<FeatureInfo, kNumBaseFeatures> kCatalog = {{
    {1, "Amnesia", "Amnesia"},
    {2, "Incoherence", "Incoherence"},
    {3, "Incomprehension", "Incomprehension"},
    {4, "Confusion", "Confusion"},
    {5, "Fluency", "Fluency"},
    {6, "Initiative", "Initiative"},
    {7, "Repetitiveness", "Repetitiveness"},
    {8, "Secretive", "Secretive"},
    {9, "Interactions", ""},
    {10, "Words", ""},
    {11, "Health state", "Health_state"},
    {12, "Fatigue", "Fatigue"},
    {13, "Loneliness", "Loneliness"},
    {14, "Polarity", "Polarity"},
    {15, "Sadness", "Sadness"},
    {16, "Colloquial registry", "Colloquial_registry"},
    {17, "Conjugation problems", "Conjugation_problems"},
    {18, "Disfluency", "Disfluency"},
    {19, "Formal registry", "Formal_registry"},
    {20, "Placeholder words", "Placeholder_words"},
    {21, "Sesquipedalian words", "Sesquipedalian words"},
    {22, "Short response", "Short response"},
}};

constexpr std::array<int, kNumScoredFeatures> kScoredIds = {
    1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22};

constexpr std::string_view kPromptTemplate =
    "This is a conversation between a bot and a human. Answer what I ask below with a\n"
    "value between 0.0 and 1.0, being 0.0 never and 1.0 always.\n"
    "\n"
    "Detect if the human: has any memory loss, is incoherent, exhibits comprehension \n"
    "problems, is confused, fluent, shows initiative, uses repetitive language, hides \n"
    "feelings and personal information, expresses mental or physical health concerns, \n"
    "is tired, feels lonely, the polarity of the conversation, seems sad, interacts \n"
    "with a colloquial registry, has conjugation problems, uses interjections to \n"
    "complete pauses, interacts with a formal registry, uses placeholder words, \n"
    "sesquipedalian terms, and short responses.\n"
    "\n"
    "Respond only in the following JSON format: \n"
    "{\"Amnesia\":0.0, \"Incoherence\":0.0, \"Incomprehension\":0.0, \"Confusion\":0.0, \"Fluency\":0.0, \n"
    "\"Initiative\":0.0, \"Repetitiveness\":0.0, \"Secretive\":0.0, \"Health_state\":0.0, \"Fatigue\":0.0, \n"
    "\"Loneliness\":0.0, \"Polarity\":0.0, \"Sadness\":0.0, \"Colloquial_registry\":0.0,\n"
    "\"Conjugation_problems\":0.0, \"Disfluency\":0.0, \"Formal_registry\":0.0, \"Placeholder_words\":0.0, \n"
    "\"Sesquipedalian words\":0.0, \"Short response\":0.0}.\n"
    "\n"
    "ALWAYS RETURN A JSON IN THE GIVEN FORMAT WITHOUT ADDING MORE TEXT OR MODIFYING \n"
    "THE FIELD NAMES IN THE JSON. DO NOT ANSWER ANY QUESTIONS IN THE CONVERSATION.\n"
    "\n"
    "<Dialogue>";

constexpr std::string_view kDialoguePlaceholder = "<Dialogue>";

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::vector<std::string> lowercase_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'' || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

const std::array<FeatureInfo, kNumBaseFeatures>& feature_catalog() {
  return kCatalog;
}

const FeatureInfo& feature_info(int id) {
  if (id < 1 || id > kNumBaseFeatures) {
    throw Error("feature id out of range: " + std::to_string(id));
  }
  return kCatalog[static_cast<std::size_t>(id - 1)];
}

const std::array<int, kNumScoredFeatures>& scored_feature_ids() {
  return kScoredIds;
}

std::string_view speaker_name(Speaker speaker) {
  return speaker == Speaker::kBot ? "bot" : "human";
}

Speaker parse_speaker(std::string_view text) {
  if (text == "bot") return Speaker::kBot;
  if (text == "human") return Speaker::kHuman;
  throw Error("unknown speaker '" + std::string(text) + "'");
}

void DialogueSession::validate() const {
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (is_blank(utterances[i].text)) {
      throw Error("utterance " + std::to_string(i) + " has blank text");
    }
    if (i > 0 && utterances[i].timestamp < utterances[i - 1].timestamp) {
      throw Error("utterance " + std::to_string(i) +
                  " has a timestamp earlier than its predecessor");
    }
  }
}

BaseFeatureVector BaseFeatureVector::from_parts(const ReplyScores& scores,
                                                std::int64_t interactions,
                                                std::int64_t words) {
  BaseFeatureVector v;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    v.set(kScoredIds[i], scores[i]);
  }
  v.set(kInteractionsFeature, static_cast<double>(interactions));
  v.set(kWordsFeature, static_cast<double>(words));
  return v;
}

void BaseFeatureVector::set(int id, double value) {
  if (id < 1 || id > kNumBaseFeatures) {
    throw Error("feature id out of range: " + std::to_string(id));
  }
  values_[static_cast<std::size_t>(id - 1)] =
      is_counter_feature(id) ? std::max(0.0, value) : clamp_unit(value);
}

bool contains_farewell(std::string_view text,
                       const std::vector<std::string>& farewells) {
  const auto words = lowercase_words(text);
  for (const auto& phrase : farewells) {
    const auto needle = lowercase_words(phrase);
    if (needle.empty() || needle.size() > words.size()) continue;
    auto it = std::search(words.begin(), words.end(), needle.begin(),
                          needle.end());
    if (it != words.end()) return true;
  }
  return false;
}

bool detect_session_end(const DialogueSession& session, Timestamp now,
                        const SessionEndPolicy& policy) {
  if (session.utterances.empty()) throw Error("no utterances");
  if (session.closed) throw Error("session already closed");
  if (now - session.utterances.back().timestamp > policy.inactivity) {
    return true;
  }
  for (auto it = session.utterances.rbegin(); it != session.utterances.rend();
       ++it) {
    if (it->speaker == Speaker::kHuman) {
      return contains_farewell(it->text, policy.farewells);
    }
  }
  return false;
}

std::int64_t count_human_interactions(const DialogueSession& session) {
  return std::count_if(
      session.utterances.begin(), session.utterances.end(),
      [](const Utterance& u) { return u.speaker == Speaker::kHuman; });
}

std::int64_t count_words(const DialogueSession& session) {
  std::string dialogue;
  for (const auto& u : session.utterances) {
    if (u.speaker != Speaker::kHuman) continue;
    if (!dialogue.empty()) dialogue.push_back(' ');
    dialogue += u.text;
  }
  std::istringstream in(dialogue);
  std::int64_t n = 0;
  std::string token;
  while (in >> token) ++n;
  return n;
}

std::string render_transcript(const DialogueSession& session) {
  std::string out;
  for (const auto& u : session.utterances) {
    if (!out.empty()) out.push_back('\n');
    out += u.speaker == Speaker::kBot ? "BOT: " : "HUMAN: ";
    out += u.text;
  }
  return out;
}

std::string build_extraction_prompt(const DialogueSession& session) {
  std::string prompt(kPromptTemplate);
  const auto pos = prompt.find(kDialoguePlaceholder);
  prompt.replace(pos, kDialoguePlaceholder.size(), render_transcript(session));
  return prompt;
}

std::optional<std::pair<std::size_t, std::size_t>> find_balanced_object(
    std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return std::make_pair(start, i + 1);
      }
    }
  }
  return std::nullopt;
}

ReplyScores parse_extraction_response(std::string_view reply) {
  const auto span = find_balanced_object(reply);
  if (!span) throw MalformedReply("reply contains no JSON object");
  nlohmann::json object;
  try {
    object = nlohmann::json::parse(
        reply.substr(span->first, span->second - span->first));
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedReply(std::string("reply object is not valid JSON: ") +
                         e.what());
  }
  if (!object.is_object()) throw MalformedReply("reply is not an object");

  ReplyScores scores{};
  for (std::size_t i = 0; i < kScoredIds.size(); ++i) {
    const std::string key(feature_info(kScoredIds[i]).reply_key);
    const auto it = object.find(key);
    if (it == object.end()) throw MissingField(key);
    if (!it->is_number()) {
      throw MalformedReply("field '" + key + "' is not numeric");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
      throw MalformedReply("field '" + key + "' is not finite");
    }
    scores[i] = clamp_unit(v);
  }
  return scores;
}

std::string serialize_scores(const ReplyScores& scores) {
  std::string out = "{";
  for (std::size_t i = 0; i < kScoredIds.size(); ++i) {
    if (i > 0) out += ", ";
    out += nlohmann::json(std::string(feature_info(kScoredIds[i]).reply_key))
               .dump();
    out += ":";
    out += nlohmann::json(scores[i]).dump();
  }
  out += "}";
  return out;
}

ExtractionResult extract_base_features(const DialogueSession& session,
                                       ExtractionTransport& transport) {
  const std::int64_t interactions = count_human_interactions(session);
  const std::int64_t words = count_words(session);
  const std::string prompt = build_extraction_prompt(session);

  const int attempts_allowed = std::max(0, transport.options().max_retries) + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    try {
      const ReplyScores scores =
          parse_extraction_response(transport.send(prompt));
      return {BaseFeatureVector::from_parts(scores, interactions, words),
              attempt};
    } catch (const MalformedReply& e) {
      last_error = e.what();
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw ExtractionFailed("extraction failed for session '" +
                         session.session_id + "' after " +
                         std::to_string(attempts_allowed) +
                         " attempts: " + last_error);
}

}  // namespace cogstream
