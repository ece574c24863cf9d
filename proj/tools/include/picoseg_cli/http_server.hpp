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

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "picoseg/service.hpp"

namespace httplib {
class Server;
}

namespace picoseg::http {

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// "host:port" or ":port".
ListenAddress parse_listen(const std::string& text);

/// Session id from the X-Session header, else the `session` query
/// parameter, else "default".
inline constexpr const char* kSessionHeader = "X-Session";

/// Registers /frames, /segment, /model, /healthz and the UI at `/`. Without
/// `ui_dir` a small built-in page is served.
void mount(httplib::Server& server, SegmentService& service,
           const std::optional<std::filesystem::path>& ui_dir);

/// Blocks until the server stops.
void serve(SegmentService& service, const ListenAddress& addr,
           const std::optional<std::filesystem::path>& ui_dir);

}  // namespace picoseg::http
