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

#include <stdexcept>
#include <string>
#include <string_view>

namespace picoseg {

// Error classes surfaced to callers. The CLI prints error_class() as the
// machine-readable reason and maps each class to a distinct exit code.
enum class ErrorCode {
  kShape = 1,
  kInvalidArgument,
  kRoi,
  kIo,
  kBadMagic,
  kTruncated,
  kFingerprint,
  kFormat,
  kNonFinite,
  kMissingLayer,
  kMissingSite,
  kUnsupportedMedia,
  kEmpty,
  kNotFound,
};

constexpr std::string_view error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kRoi: return "roi";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kFingerprint: return "fingerprint";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kMissingLayer: return "missing_layer";
    case ErrorCode::kMissingSite: return "missing_site";
    case ErrorCode::kUnsupportedMedia: return "unsupported_media";
    case ErrorCode::kEmpty: return "empty";
    case ErrorCode::kNotFound: return "not_found";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view error_class() const noexcept { return picoseg::error_class(code_); }

 private:
  ErrorCode code_;
};

}  // namespace picoseg
