// Copyright 2026 The picoseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "picoseg_cli/http_server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "picoseg/error.hpp"

namespace picoseg::http {

namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>picoseg</title></head>
<body>
<h1>picoseg gateway</h1>
<p>No UI bundle mounted. Start the server with <code>--ui-dir</code> to serve one.</p>
<ul>
<li><code>POST /frames</code> (binary PPM body)</li>
<li><code>POST /segment</code> <code>{"frame_id", "bbox": [x, y, w, h]}</code></li>
<li><code>GET /model</code>, <code>GET /healthz</code></li>
</ul>
</body></html>
)";

std::string session_of(const httplib::Request& req) {
  if (req.has_header(kSessionHeader)) return req.get_header_value(kSessionHeader);
  if (req.has_param("session")) return req.get_param_value("session");
  return "default";
}

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, reply.content_type);
}

}  // namespace

ListenAddress parse_listen(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "--listen expects host:port, got '" + text + "'");
  }
  ListenAddress a;
  if (colon > 0) a.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    a.port = std::stoi(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "invalid port in '" + text + "'");
  }
  if (a.port < 0 || a.port > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "port out of range in '" + text + "'");
  }
  return a;
}

void mount(httplib::Server& server, SegmentService& service,
           const std::optional<std::filesystem::path>& ui_dir) {
  server.Post("/frames", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.post_frame(session_of(req), req.body));
  });
  server.Post("/segment", [&service](const httplib::Request& req, httplib::Response& res) {
    const Reply reply = service.post_segment(session_of(req), req.body);
    if (reply.status == 429) {
      const auto j = nlohmann::json::parse(reply.body, nullptr, false);
      if (j.is_object() && j.contains("retry_after_ms")) {
        // Retry-After is in whole seconds; round up.
        const auto ms = j["retry_after_ms"].get<long long>();
        res.set_header("Retry-After", std::to_string((ms + 999) / 1000));
      }
    }
    send(res, reply);
  });
  server.Get("/model", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, service.get_model());
  });
  server.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, service.healthz());
  });

  if (ui_dir) {
    if (!server.set_mount_point("/", ui_dir->string())) {
      throw Error(ErrorCode::kIo, "UI directory " + ui_dir->string() + " does not exist");
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
}

void serve(SegmentService& service, const ListenAddress& addr,
           const std::optional<std::filesystem::path>& ui_dir) {
  httplib::Server server;
  mount(server, service, ui_dir);
  spdlog::info("listening on {}:{}", addr.host, addr.port);
  if (!server.listen(addr.host, addr.port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + addr.host + ":" + std::to_string(addr.port));
  }
}

}  // namespace picoseg::http
