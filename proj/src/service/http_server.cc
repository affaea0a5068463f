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

#include "cogstream/service/http_server.h"

#include "httplib.h"

namespace cogstream::service {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::optional<Label> label_header(const httplib::Request& req) {
  if (!req.has_header("X-Label")) return std::nullopt;
  try {
    return parse_label(req.get_header_value("X-Label"));
  } catch (const Error& e) {
    throw BadRequest(std::string("bad X-Label header: ") + e.what());
  }
}

std::optional<Timestamp> now_param(const httplib::Request& req) {
  if (!req.has_param("now")) return std::nullopt;
  try {
    return from_epoch_seconds(std::stoll(req.get_param_value("now")));
  } catch (const std::exception&) {
    throw BadRequest("bad 'now' parameter");
  }
}

UtteranceInput parse_utterance(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BadRequest(std::string("malformed body: ") + e.what());
  }
  if (!j.is_object()) throw BadRequest("body must be an object");
  UtteranceInput in;
  try {
    in.speaker = parse_speaker(j.at("speaker").get<std::string>());
    in.text = j.at("text").get<std::string>();
    if (j.contains("t") && !j["t"].is_null()) {
      in.timestamp = from_epoch_seconds(j["t"].get<std::int64_t>());
    }
    if (j.contains("session_id") && !j["session_id"].is_null()) {
      in.session_id = j["session_id"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw BadRequest(std::string("malformed body: ") + e.what());
  } catch (const BadRequest&) {
    throw;
  } catch (const Error& e) {
    throw BadRequest(e.what());
  }
  return in;
}

}  // namespace

HttpServer::HttpServer(ScreeningService& service, std::string bearer_token)
    : service_(service),
      token_(std::move(bearer_token)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& srv = *server_;

  srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (token_.empty() || req.path == "/healthz") return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") != "Bearer " + token_) {
      send_error(res, 401, "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const BadRequest& e) {
      send_error(res, 400, e.what());
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const SessionConflict& e) {
      send_error(res, 409, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  srv.Post(R"(/users/([^/]+)/utterances)",
           [this](const httplib::Request& req, httplib::Response& res) {
             UtteranceInput in = parse_utterance(req.body);
             in.label = label_header(req);
             const auto result = service_.add_utterance(req.matches[1], in);
             send_json(res, 200, {{"session_id", result.session_id}, {"closed", result.closed}});
           });

  srv.Post(R"(/users/([^/]+)/sessions/current/close)",
           [this](const httplib::Request& req, httplib::Response& res) {
             const auto label = label_header(req);
             const auto outcome = service_.close_current(req.matches[1], label);
             const Timestamp now =
                 outcome.record ? outcome.record->timestamp : service_.now();
             auto body = service_.close_payload(outcome, now);
             send_json(res, outcome.record ? 200 : 502, body);
           });

  srv.Get(R"(/users/([^/]+)/trajectory)",
          [this](const httplib::Request& req, httplib::Response& res) {
            double days = 14.0;
            if (req.has_param("days")) {
              try {
                days = std::stod(req.get_param_value("days"));
              } catch (const std::exception&) {
                throw BadRequest("bad 'days' parameter");
              }
              if (!(days >= 0)) throw BadRequest("'days' must be non-negative");
            }
            const auto window = std::chrono::seconds(static_cast<std::int64_t>(days * 86400));
            const Timestamp now = now_param(req).value_or(service_.now());
            send_json(res, 200, service_.trajectory_payload(req.matches[1], window, now));
          });

  srv.Get(R"(/users/([^/]+)/explanation)",
          [this](const httplib::Request& req, httplib::Response& res) {
            const Timestamp now = now_param(req).value_or(service_.now());
            send_json(res, 200, service_.explanation_for(req.matches[1], now));
          });

  srv.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, service_.metrics().to_json());
  });
}

bool HttpServer::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int HttpServer::bind_to_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace cogstream::service
