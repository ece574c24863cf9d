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
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace picoseg {

// Little-endian byte packing for the on-disk formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_le(bits);
  }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void f32s(std::span<const float> values) {
    for (float v : values) f32(v);
  }
  void i8s(std::span<const std::int8_t> values) {
    for (std::int8_t v : values) bytes_.push_back(static_cast<std::uint8_t>(v));
  }
  /// u16 length prefix followed by the UTF-8 bytes.
  void name(std::string_view s);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  template <class T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
  }

  std::vector<std::uint8_t> bytes_;
};

// Reads little-endian values; running past the end throws kTruncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le<std::uint8_t>()); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() {
    const std::uint32_t bits = get_le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string raw(std::size_t count);
  std::string name() { return raw(u16()); }
  void f32s(std::span<float> out) {
    for (float& v : out) v = f32();
  }
  void i8s(std::span<std::int8_t> out);

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t count) const;

  template <class T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v = static_cast<T>(v | (static_cast<T>(bytes_[pos_ + i]) << (8 * i)));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace picoseg
