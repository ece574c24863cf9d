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

#include "picoseg/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "picoseg/binary_io.hpp"
#include "picoseg/error.hpp"

namespace picoseg {

namespace {

struct PnmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

// Parses "Px <w> <h> <maxval>" with comments, followed by one whitespace byte.
PnmHeader parse_header(std::span<const std::uint8_t> bytes, char kind) {
  if (bytes.empty()) throw Error(ErrorCode::kUnsupportedMedia, "empty image body");
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != static_cast<std::uint8_t>(kind)) {
    throw Error(ErrorCode::kUnsupportedMedia,
                std::string("unsupported image format (expected binary P") + kind + ")");
  }
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(ErrorCode::kUnsupportedMedia, "malformed PNM header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::kUnsupportedMedia, "PNM header value too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  PnmHeader h;
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::kUnsupportedMedia, "malformed PNM header");
  }
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1) throw Error(ErrorCode::kUnsupportedMedia, "PNM has zero size");
  if (h.maxval < 1 || h.maxval > 255) {
    throw Error(ErrorCode::kUnsupportedMedia, "only 8-bit PNM is supported");
  }
  return h;
}

std::vector<std::uint8_t> header_bytes(char kind, int w, int h) {
  const std::string s = std::string("P") + kind + "\n" + std::to_string(w) + " " +
                        std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

}  // namespace

Tensor decode_ppm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_header(bytes, '6');
  const std::size_t plane = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < plane * 3) {
    throw Error(ErrorCode::kUnsupportedMedia, "PPM pixel data is truncated");
  }
  Tensor out(Shape{1, 3, h.height, h.width});
  const std::uint8_t* px = bytes.data() + h.data_offset;
  const float inv = 1.0f / static_cast<float>(h.maxval);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) out.plane(0, c)[i] = static_cast<float>(px[3 * i + c]) * inv;
  }
  return out;
}

Tensor read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

std::vector<std::uint8_t> encode_ppm(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw Error(ErrorCode::kShape, "encode_ppm expects (1,3,H,W), got " + s.str());
  std::vector<std::uint8_t> out = header_bytes('6', s.w, s.h);
  const std::size_t plane = s.plane();
  out.reserve(out.size() + plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(image.plane(0, c)[i], 0.0f, 1.0f);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
  }
  return out;
}

void write_ppm(const Tensor& image, const std::filesystem::path& path) {
  write_file(path, encode_ppm(image));
}

std::vector<std::uint8_t> encode_pgm(const Mask& mask) {
  std::vector<std::uint8_t> out = header_bytes('5', mask.width, mask.height);
  for (std::uint8_t v : mask.data) out.push_back(v ? 255 : 0);
  return out;
}

void write_pgm(const Mask& mask, const std::filesystem::path& path) {
  write_file(path, encode_pgm(mask));
}

Mask decode_pgm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_header(bytes, '5');
  const std::size_t plane = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < plane) {
    throw Error(ErrorCode::kUnsupportedMedia, "PGM pixel data is truncated");
  }
  Mask m(h.height, h.width);
  for (std::size_t i = 0; i < plane; ++i) {
    m.data[i] = 2 * bytes[h.data_offset + i] >= h.maxval ? 1 : 0;
  }
  return m;
}

}  // namespace picoseg
