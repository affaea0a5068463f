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

#ifndef COGSTREAM_SERVICE_HTTP_SERVER_H_
#define COGSTREAM_SERVICE_HTTP_SERVER_H_

#include <memory>
#include <string>

#include "cogstream/service/screening_service.h"

namespace httplib {
class Server;
}

namespace cogstream::service {

// JSON-over-HTTP front end for a ScreeningService.
//   POST /users/{id}/utterances              {speaker, text, t?, session_id?}
//   POST /users/{id}/sessions/current/close
//   GET  /users/{id}/trajectory?days=14[&now=<epoch s>]
//   GET  /users/{id}/explanation[?now=<epoch s>]
//   GET  /metrics
//   GET  /healthz
// An "X-Label: present|absent" header on the two POST routes attaches an
// evaluation label to the session.
class HttpServer {
 public:
  HttpServer(ScreeningService& service, std::string bearer_token = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until stop() is called. Returns false if the socket can't be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (-1 on failure); follow with
  // listen_after_bind() on a serving thread.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  void install_routes();

  ScreeningService& service_;
  std::string token_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace cogstream::service

#endif  // COGSTREAM_SERVICE_HTTP_SERVER_H_
