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

#include "cogstream/service/config.h"

#include <cstdlib>
#include <fstream>

#include "cogstream/extraction.h"

namespace cogstream::service {

std::string_view transport_mode_name(TransportMode mode) {
  switch (mode) {
    case TransportMode::kLive:
      return "live";
    case TransportMode::kReplay:
      return "replay";
    case TransportMode::kStub:
      return "stub";
  }
  return "stub";
}

TransportMode parse_transport_mode(std::string_view text) {
  if (text == "live") return TransportMode::kLive;
  if (text == "replay") return TransportMode::kReplay;
  if (text == "stub") return TransportMode::kStub;
  throw Error("unknown transport mode '" + std::string(text) + "'");
}

nlohmann::json ServiceConfig::to_json() const {
  return {{"host", host},
          {"port", port},
          {"data_dir", data_dir},
          {"transport", transport_mode_name(transport)},
          {"fixtures", fixtures_path},
          {"endpoint", {{"url", endpoint.url}, {"model", endpoint.model}}},
          {"timeout_ms", transport_options.timeout.count()},
          {"max_retries", transport_options.max_retries},
          {"run", run.to_json()},
          {"sweep_interval_s", sweep_interval.count()},
          {"inactivity_s", session_policy.inactivity.count()},
          {"farewells", session_policy.farewells}};
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) {
  ServiceConfig c;
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.data_dir = j.value("data_dir", c.data_dir);
  if (j.contains("transport")) {
    c.transport = parse_transport_mode(j["transport"].get<std::string>());
  }
  c.fixtures_path = j.value("fixtures", c.fixtures_path);
  if (j.contains("endpoint")) {
    const auto& e = j["endpoint"];
    c.endpoint.url = e.value("url", c.endpoint.url);
    c.endpoint.model = e.value("model", c.endpoint.model);
    c.endpoint.token = e.value("token", c.endpoint.token);
  }
  c.transport_options.timeout =
      std::chrono::milliseconds(j.value("timeout_ms", c.transport_options.timeout.count()));
  c.transport_options.max_retries = j.value("max_retries", c.transport_options.max_retries);
  if (j.contains("run")) c.run = RunConfig::from_json(j["run"]);
  c.bearer_token = j.value("token", c.bearer_token);
  c.sweep_interval = std::chrono::seconds(j.value("sweep_interval_s", c.sweep_interval.count()));
  c.session_policy.inactivity =
      std::chrono::seconds(j.value("inactivity_s", c.session_policy.inactivity.count()));
  if (j.contains("farewells")) {
    c.session_policy.farewells = j["farewells"].get<std::vector<std::string>>();
  }
  if (c.port < 0 || c.port > 65535) throw Error("port out of range");
  if (c.sweep_interval.count() < 1) throw Error("sweep_interval_s must be positive");
  return c;
}

ServiceConfig ServiceConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file '" + path + "': " + e.what());
  }
}

void ServiceConfig::apply_environment(
    const std::function<const char*(const char*)>& getenv) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    const char* v = getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("COGSTREAM_HOST")) host = *v;
  if (auto v = get("COGSTREAM_PORT")) port = std::stoi(*v);
  if (auto v = get("COGSTREAM_DATA_DIR")) data_dir = *v;
  if (auto v = get("COGSTREAM_TRANSPORT")) transport = parse_transport_mode(*v);
  if (auto v = get("COGSTREAM_FIXTURES")) fixtures_path = *v;
  if (auto v = get("COGSTREAM_ENDPOINT_URL")) endpoint.url = *v;
  if (auto v = get("COGSTREAM_ENDPOINT_MODEL")) endpoint.model = *v;
  if (auto v = get("COGSTREAM_ENDPOINT_TOKEN")) endpoint.token = *v;
  if (auto v = get("COGSTREAM_TOKEN")) bearer_token = *v;
  if (auto v = get("COGSTREAM_SCENARIO")) run.scenario = std::stoi(*v);
  if (auto v = get("COGSTREAM_MODEL")) run.model = learners::parse_model_kind(*v);
  if (auto v = get("COGSTREAM_SELECTOR")) run.selector_mode = parse_selector_mode(*v);
  if (auto v = get("COGSTREAM_SEED")) run.seed = std::stoull(*v);
  run.validate();
}

void ServiceConfig::apply_environment() {
  apply_environment([](const char* name) { return std::getenv(name); });
}

std::string stub_reply(const std::string& prompt) {
  const std::string digest = sha256_hex(prompt);
  ReplyScores scores{};
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const int byte = std::stoi(digest.substr(2 * k, 2), nullptr, 16);
    scores[k] = byte / 255.0;
  }
  return serialize_scores(scores);
}

std::unique_ptr<ExtractionTransport> make_transport(const ServiceConfig& config) {
  switch (config.transport) {
    case TransportMode::kLive:
      if (config.endpoint.url.empty()) throw Error("live transport needs an endpoint url");
      return std::make_unique<ChatCompletionTransport>(config.endpoint,
                                                       config.transport_options);
    case TransportMode::kReplay: {
      auto t = std::make_unique<FixtureReplayTransport>(config.transport_options);
      if (config.fixtures_path.empty()) throw Error("replay transport needs a fixtures file");
      t->load(config.fixtures_path);
      return t;
    }
    case TransportMode::kStub:
      return std::make_unique<StubTransport>(stub_reply, config.transport_options);
  }
  throw Error("unknown transport mode");
}

}  // namespace cogstream::service
