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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "picoseg/pipeline.hpp"
#include "picoseg/tensor.hpp"

namespace picoseg {

/// Milliseconds on a monotonic clock.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

/// First-wins limiter: a request is admitted iff no request was admitted in
/// the preceding `window_ms`.
class RateLimiter {
 public:
  explicit RateLimiter(std::int64_t window_ms = 150) : window_ms_(window_ms) {}

  struct Decision {
    bool admitted = false;
    std::int64_t retry_after_ms = 0;
  };

  /// Rejections do not move the window.
  Decision try_admit(std::int64_t now_ms);
  /// Time to wait before try_admit(now) would succeed; 0 if it would now.
  std::int64_t retry_after(std::int64_t now_ms) const;
  std::optional<std::int64_t> last_admitted() const { return last_; }

 private:
  std::int64_t window_ms_;
  std::optional<std::int64_t> last_;
};

/// Transport-independent reply.
struct Reply {
  int status = 200;
  std::string body;  // JSON
  std::string content_type = "application/json";
};

struct ServiceOptions {
  std::int64_t rate_limit_ms = 150;
};

/// Interactive segmentation service: per-session frames, the prompt rate
/// limit, and the segment pipeline. Sessions are independent; each is
/// serialized by its own lock while inference runs on the shared model.
class SegmentService {
 public:
  explicit SegmentService(std::shared_ptr<const Segmenter> segmenter, Clock clock = steady_clock_ms(),
                          ServiceOptions options = {});

  /// Body must be a binary PPM; replaces the session's active frame.
  Reply post_frame(std::string_view session, std::string_view body);

  /// {"frame_id": int, "bbox": [x, y, w, h], "display": {"width", "height"}?}
  /// Replies with the full-frame mask as uncompressed RLE.
  Reply post_segment(std::string_view session, std::string_view json_body);

  Reply get_model() const;
  Reply healthz() const;

 private:
  struct Session {
    std::mutex mu;
    std::int64_t frame_id = 0;
    std::optional<Tensor> frame;
    RateLimiter limiter;
  };

  Session& session(std::string_view id);

  std::shared_ptr<const Segmenter> segmenter_;
  Clock clock_;
  ServiceOptions options_;
  std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>, std::less<>> sessions_;
  std::int64_t next_frame_id_ = 1;
};

/// JSON error body {"error": class, "message": ...}.
Reply error_reply(int status, std::string_view error_class, std::string_view message);

}  // namespace picoseg
