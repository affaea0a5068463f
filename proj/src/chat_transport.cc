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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cogstream/transport.h"
#include "json.hpp"

namespace cogstream {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("endpoint url needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ChatCompletionTransport::ChatCompletionTransport(ChatEndpoint endpoint,
                                                 TransportOptions options)
    : ExtractionTransport(options), endpoint_(std::move(endpoint)) {}

std::string ChatCompletionTransport::send(const std::string& prompt) {
  const ParsedUrl url = split_url(endpoint_.url);
  httplib::Client client(url.origin);
  const auto timeout = options().timeout;
  client.set_connection_timeout(
      std::chrono::duration_cast<std::chrono::seconds>(timeout).count());
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::seconds>(timeout).count());
  if (!endpoint_.token.empty()) {
    client.set_bearer_token_auth(endpoint_.token);
  }

  const nlohmann::json body = {
      {"model", endpoint_.model},
      {"messages", {{{"role", "user"}, {"content", prompt}}}},
  };
  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) {
    throw TransportError("chat endpoint unreachable: " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("chat endpoint returned HTTP " +
                         std::to_string(res->status));
  }
  // The usual chat-completion envelope; anything else is passed through as
  // opaque text for the reply parser to judge.
  const auto envelope = nlohmann::json::parse(res->body, nullptr, false);
  if (!envelope.is_discarded() && envelope.is_object()) {
    const auto choices = envelope.find("choices");
    if (choices != envelope.end() && choices->is_array() && !choices->empty()) {
      const auto& message = (*choices)[0].value("message", nlohmann::json{});
      if (message.contains("content") && message["content"].is_string()) {
        return message["content"].get<std::string>();
      }
    }
  }
  return res->body;
}

}  // namespace cogstream
