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

#ifndef COGSTREAM_TRANSPORT_H_
#define COGSTREAM_TRANSPORT_H_

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>

#include "cogstream/common.h"

namespace cogstream {

class TransportError : public Error {
 public:
  using Error::Error;
};

struct TransportOptions {
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
};

// Sends one prompt to a chat-completion style endpoint and returns the reply
// text. Implementations must tolerate concurrent send() calls.
class ExtractionTransport {
 public:
  explicit ExtractionTransport(TransportOptions options = {})
      : options_(options) {}
  virtual ~ExtractionTransport() = default;

  virtual std::string send(const std::string& prompt) = 0;

  const TransportOptions& options() const { return options_; }

 private:
  TransportOptions options_;
};

// Deterministic in-process responder; calls are serialized.
class StubTransport : public ExtractionTransport {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  explicit StubTransport(Responder responder, TransportOptions options = {})
      : ExtractionTransport(options), responder_(std::move(responder)) {}

  std::string send(const std::string& prompt) override;
  int calls() const;

 private:
  mutable std::mutex mu_;
  Responder responder_;
  int calls_ = 0;
};

// Replays recorded replies keyed by the SHA-256 of the prompt. The fixture
// file holds one JSON object per line: {"prompt_hash": ..., "reply_text": ...}.
class FixtureReplayTransport : public ExtractionTransport {
 public:
  explicit FixtureReplayTransport(TransportOptions options = {})
      : ExtractionTransport(options) {}

  // Adds every record of a fixture file; returns how many were read.
  std::size_t load(const std::string& path);

  void add(const std::string& prompt_hash, std::string reply_text);
  std::size_t size() const;

  std::string send(const std::string& prompt) override;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> replies_;
};

// Wraps another transport and appends every exchange to a fixture file.
class RecordingTransport : public ExtractionTransport {
 public:
  RecordingTransport(ExtractionTransport& inner, std::string fixture_path);

  std::string send(const std::string& prompt) override;

 private:
  ExtractionTransport& inner_;
  std::string path_;
  std::mutex mu_;
};

struct ChatEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string model;
  std::string token;
};

// Live chat-completion adapter: a single user-role message per call.
class ChatCompletionTransport : public ExtractionTransport {
 public:
  ChatCompletionTransport(ChatEndpoint endpoint, TransportOptions options = {});

  std::string send(const std::string& prompt) override;

 private:
  ChatEndpoint endpoint_;
};

std::string fixture_line(const std::string& prompt_hash,
                         const std::string& reply_text);

}  // namespace cogstream

#endif  // COGSTREAM_TRANSPORT_H_
