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

#include "picoseg/service.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

#include "picoseg/coco.hpp"
#include "picoseg/error.hpp"
#include "picoseg/image_io.hpp"

namespace picoseg {

namespace {

using json = nlohmann::json;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedMedia: return 415;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kRoi:
    case ErrorCode::kShape:
    case ErrorCode::kFormat: return 400;
    default: return 500;
  }
}

Reply from_error(const Error& e) {
  return error_reply(status_for(e.code()), e.error_class(), e.what());
}

BBox parse_box(const json& body) {
  if (!body.contains("bbox") || !body["bbox"].is_array() || body["bbox"].size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "bbox must be [x, y, w, h]");
  }
  for (const json& v : body["bbox"]) {
    if (!v.is_number()) throw Error(ErrorCode::kInvalidArgument, "bbox entries must be numbers");
  }
  const json& b = body["bbox"];
  BBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  validate(box);
  return box;
}

}  // namespace

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

std::int64_t RateLimiter::retry_after(std::int64_t now_ms) const {
  if (!last_) return 0;
  const std::int64_t elapsed = now_ms - *last_;
  return elapsed >= window_ms_ ? 0 : window_ms_ - elapsed;
}

RateLimiter::Decision RateLimiter::try_admit(std::int64_t now_ms) {
  const std::int64_t wait = retry_after(now_ms);
  if (wait > 0) return {false, wait};
  last_ = now_ms;
  return {true, 0};
}

Reply error_reply(int status, std::string_view error_class, std::string_view message) {
  json j{{"error", error_class}, {"message", message}};
  return Reply{status, j.dump()};
}

SegmentService::SegmentService(std::shared_ptr<const Segmenter> segmenter, Clock clock,
                               ServiceOptions options)
    : segmenter_(std::move(segmenter)), clock_(std::move(clock)), options_(options) {
  if (!segmenter_) throw Error(ErrorCode::kInvalidArgument, "SegmentService needs a model");
  if (!clock_) throw Error(ErrorCode::kInvalidArgument, "SegmentService needs a clock");
}

SegmentService::Session& SegmentService::session(std::string_view id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    auto s = std::make_unique<Session>();
    s->limiter = RateLimiter(options_.rate_limit_ms);
    it = sessions_.emplace(std::string(id), std::move(s)).first;
  }
  return *it->second;
}

Reply SegmentService::post_frame(std::string_view session_id, std::string_view body) {
  Tensor image;
  try {
    image = decode_ppm(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
  } catch (const Error& e) {
    return from_error(e);
  }
  const int width = image.shape().w, height = image.shape().h;
  std::int64_t id;
  {
    std::lock_guard lock(sessions_mu_);
    id = next_frame_id_++;
  }
  Session& s = session(session_id);
  {
    std::lock_guard lock(s.mu);
    s.frame = std::move(image);
    s.frame_id = id;
  }
  return Reply{200, json{{"frame_id", id}, {"width", width}, {"height", height}}.dump()};
}

Reply SegmentService::post_segment(std::string_view session_id, std::string_view json_body) {
  json body;
  try {
    body = json::parse(json_body);
  } catch (const json::parse_error&) {
    return error_reply(400, "invalid_argument", "request body is not valid JSON");
  }
  if (!body.is_object() || !body.contains("frame_id") || !body["frame_id"].is_number_integer()) {
    return error_reply(400, "invalid_argument", "frame_id must be an integer");
  }
  Session& s = session(session_id);
  std::lock_guard lock(s.mu);
  try {
    if (!s.frame || s.frame_id != body["frame_id"].get<std::int64_t>()) {
      throw Error(ErrorCode::kNotFound, "unknown frame_id for this session");
    }
    const Tensor& frame = *s.frame;
    const Extent sensor{static_cast<double>(frame.shape().w), static_cast<double>(frame.shape().h)};
    BBox box = parse_box(body);
    if (body.contains("display")) {
      const json& d = body["display"];
      if (!d.is_object() || !d.contains("width") || !d.contains("height") ||
          !d["width"].is_number() || !d["height"].is_number()) {
        throw Error(ErrorCode::kInvalidArgument, "display must be {width, height}");
      }
      box = display_to_sensor(box, Extent{d["width"].get<double>(), d["height"].get<double>()}, sensor);
    }
    const CropRect rect = make_square_roi(box, segmenter_->prompt(), sensor);

    const RateLimiter::Decision decision = s.limiter.try_admit(clock_());
    if (!decision.admitted) {
      json j{{"error", "rate_limited"},
             {"message", "prompts are limited to one per " + std::to_string(options_.rate_limit_ms) + " ms"},
             {"retry_after_ms", decision.retry_after_ms}};
      return Reply{429, j.dump()};
    }

    const SegmentResult r = segmenter_->segment_rect(frame, rect);
    const Mask full = paste_mask(r.mask, r.window, frame.shape().h, frame.shape().w);
    const RleMask rle = encode_rle(full);
    json j;
    j["frame_id"] = s.frame_id;
    j["mask"] = {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
    j["area"] = full.area();
    j["rect"] = {{"x1", rect.x1}, {"y1", rect.y1}, {"x2", rect.x2}, {"y2", rect.y2}};
    j["window"] = {{"x", r.window.x0}, {"y", r.window.y0}, {"width", r.window.width},
                   {"height", r.window.height}};
    j["latency_ms"] = r.latency_ms;
    j["model"] = segmenter_->label();
    return Reply{200, j.dump()};
  } catch (const Error& e) {
    return from_error(e);
  }
}

Reply SegmentService::get_model() const {
  const ModelInfo& info = segmenter_->info();
  json j{{"params", info.params},
         {"macs", info.macs},
         {"size_bytes", info.size_bytes},
         {"quantized", info.quantized},
         {"model", segmenter_->label()},
         {"input_size", segmenter_->prompt().target_size}};
  return Reply{200, j.dump()};
}

Reply SegmentService::healthz() const { return Reply{200, json{{"ok", true}}.dump()}; }

}  // namespace picoseg
