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

#include "picoseg/binary_io.hpp"

#include <fstream>
#include <iterator>

#include "picoseg/error.hpp"

namespace picoseg {

void ByteWriter::name(std::string_view s) {
  if (s.size() > 0xFFFFu) throw Error(ErrorCode::kFormat, "name longer than 65535 bytes");
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s);
}

void ByteReader::need(std::size_t count) const {
  if (remaining() < count) {
    throw Error(ErrorCode::kTruncated, "unexpected end of data: need " + std::to_string(count) +
                                           " bytes at offset " + std::to_string(pos_) + ", have " +
                                           std::to_string(remaining()));
  }
}

std::string ByteReader::raw(std::size_t count) {
  need(count);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), count);
  pos_ += count;
  return s;
}

void ByteReader::i8s(std::span<std::int8_t> out) {
  need(out.size());
  std::memcpy(out.data(), bytes_.data() + pos_, out.size());
  pos_ += out.size();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace picoseg
