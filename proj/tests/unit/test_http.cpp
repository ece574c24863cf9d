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

#include <doctest.h>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "../support/gateway_script.hpp"
#include "../support/test_support.hpp"
#include "picoseg_cli/http_server.hpp"

using namespace picoseg;
using nlohmann::json;

namespace {

std::shared_ptr<const Segmenter> stub() {
  Predictor p = [](const Tensor& crop) { return Tensor(Shape{1, 1, crop.shape().h, crop.shape().w}, 1.0f); };
  return std::make_shared<const Segmenter>("stub", p, model_info(NetSpec{}, true));
}

// Runs a mounted server on an ephemeral port for the test's lifetime.
class LiveServer {
 public:
  LiveServer(SegmentService& svc, std::optional<std::filesystem::path> ui = std::nullopt) {
    http::mount(server_, svc, ui);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("parse_listen") {
  const auto a = http::parse_listen("0.0.0.0:9000");
  CHECK(a.host == "0.0.0.0");
  CHECK(a.port == 9000);
  CHECK(http::parse_listen(":81").host == "127.0.0.1");
  CHECK(test::error_of([] { http::parse_listen("localhost"); }) == ErrorCode::kInvalidArgument);
  CHECK(test::error_of([] { http::parse_listen("h:99999"); }) == ErrorCode::kInvalidArgument);
  CHECK(test::error_of([] { http::parse_listen("h:8x"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("HTTP round trip over the endpoints") {
  test::FakeClock clock;
  SegmentService svc(stub(), clock.fn());
  LiveServer live(svc);
  auto cli = live.client();

  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto model = cli.Get("/model");
  REQUIRE(model);
  CHECK(json::parse(model->body)["quantized"] == true);

  auto index = cli.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body.find("picoseg") != std::string::npos);

  const httplib::Headers session{{http::kSessionHeader, "cam1"}};
  auto frame = cli.Post("/frames", session, test::ppm_body(64, 48), "image/x-portable-pixmap");
  REQUIRE(frame);
  CHECK(frame->status == 200);
  const auto id = json::parse(frame->body)["frame_id"].get<std::int64_t>();

  clock.set(1000);
  auto ok = cli.Post("/segment", session, test::segment_body(id, 8, 8, 16, 16), "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(json::parse(ok->body)["area"].get<int>() > 0);

  clock.set(1050);
  auto limited = cli.Post("/segment", session, test::segment_body(id, 8, 8, 16, 16), "application/json");
  REQUIRE(limited);
  CHECK(limited->status == 429);
  CHECK(json::parse(limited->body)["retry_after_ms"] == 100);
  CHECK(limited->get_header_value("Retry-After") == "1");

  // Query-parameter session, and a session with no frame.
  auto other = cli.Post("/segment?session=cam2", test::segment_body(id, 8, 8, 16, 16), "application/json");
  REQUIRE(other);
  CHECK(other->status == 404);

  auto png = cli.Post("/frames", "\x89PNG\r\n\x1a\n", "image/png");
  REQUIRE(png);
  CHECK(png->status == 415);
}

TEST_CASE("static UI bundle is served at /") {
  const auto dir = test::scratch_dir("ui");
  std::ofstream(dir / "index.html") << "<html>bundle-marker</html>";
  test::FakeClock clock;
  SegmentService svc(stub(), clock.fn());
  LiveServer live(svc, dir);
  auto cli = live.client();
  auto index = cli.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body.find("bundle-marker") != std::string::npos);
  auto model = cli.Get("/model");
  REQUIRE(model);
  CHECK(model->status == 200);

  httplib::Server s;
  CHECK(test::error_of([&] { http::mount(s, svc, dir / "missing"); }) == ErrorCode::kIo);
}
