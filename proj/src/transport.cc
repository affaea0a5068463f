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

#include "cogstream/transport.h"

#include <fstream>

#include "json.hpp"

namespace cogstream {

std::string StubTransport::send(const std::string& prompt) {
  std::lock_guard<std::mutex> lock(mu_);
  ++calls_;
  return responder_(prompt);
}

int StubTransport::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::string fixture_line(const std::string& prompt_hash,
                         const std::string& reply_text) {
  return nlohmann::json{{"prompt_hash", prompt_hash},
                        {"reply_text", reply_text}}
      .dump();
}

std::size_t FixtureReplayTransport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fixture file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t added = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      add(record.at("prompt_hash").get<std::string>(),
          record.at("reply_text").get<std::string>());
      ++added;
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) +
                  ": bad fixture record: " + e.what());
    }
  }
  return added;
}

void FixtureReplayTransport::add(const std::string& prompt_hash,
                                 std::string reply_text) {
  std::lock_guard<std::mutex> lock(mu_);
  replies_[prompt_hash] = std::move(reply_text);
}

std::size_t FixtureReplayTransport::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return replies_.size();
}

std::string FixtureReplayTransport::send(const std::string& prompt) {
  const std::string hash = sha256_hex(prompt);
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = replies_.find(hash);
  if (it == replies_.end()) {
    throw TransportError("no recorded reply for prompt " + hash);
  }
  return it->second;
}

RecordingTransport::RecordingTransport(ExtractionTransport& inner,
                                       std::string fixture_path)
    : ExtractionTransport(inner.options()),
      inner_(inner),
      path_(std::move(fixture_path)) {}

std::string RecordingTransport::send(const std::string& prompt) {
  std::string reply = inner_.send(prompt);
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot append to fixture file '" + path_ + "'");
  out << fixture_line(sha256_hex(prompt), reply) << '\n';
  return reply;
}

}  // namespace cogstream
