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

#ifndef COGSTREAM_SERVICE_CONFIG_H_
#define COGSTREAM_SERVICE_CONFIG_H_

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cogstream/pipeline.h"
#include "cogstream/transport.h"

namespace cogstream::service {

enum class TransportMode { kLive, kReplay, kStub };

std::string_view transport_mode_name(TransportMode mode);
TransportMode parse_transport_mode(std::string_view text);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "cogstream-data";
  TransportMode transport = TransportMode::kStub;
  std::string fixtures_path;  // replay mode
  ChatEndpoint endpoint;      // live mode
  TransportOptions transport_options;
  RunConfig run;
  std::string bearer_token;  // empty disables authentication
  std::chrono::seconds sweep_interval{30};
  SessionEndPolicy session_policy;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig from_file(const std::string& path);

  // COGSTREAM_HOST, COGSTREAM_PORT, COGSTREAM_DATA_DIR, COGSTREAM_TRANSPORT,
  // COGSTREAM_FIXTURES, COGSTREAM_ENDPOINT_URL, COGSTREAM_ENDPOINT_MODEL,
  // COGSTREAM_ENDPOINT_TOKEN, COGSTREAM_TOKEN, COGSTREAM_SCENARIO,
  // COGSTREAM_MODEL, COGSTREAM_SELECTOR, COGSTREAM_SEED.
  void apply_environment(const std::function<const char*(const char*)>& getenv);
  void apply_environment();
};

// Deterministic offline transport: every score is derived from the digest of
// the prompt, so the same transcript always yields the same features.
std::string stub_reply(const std::string& prompt);

std::unique_ptr<ExtractionTransport> make_transport(const ServiceConfig& config);

}  // namespace cogstream::service

#endif  // COGSTREAM_SERVICE_CONFIG_H_
