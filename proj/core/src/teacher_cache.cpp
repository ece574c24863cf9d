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

#include "picoseg/teacher_cache.hpp"

#include <cmath>
#include <random>

#include "picoseg/binary_io.hpp"
#include "picoseg/error.hpp"
#include "picoseg/synth.hpp"

namespace picoseg {

namespace {
constexpr char kMagic[] = "PTC1";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void validate(const TeacherRecord& record) {
  if (record.logits.shape() != Shape{1, 1, kTeacherSize, kTeacherSize}) {
    throw Error(ErrorCode::kShape, "teacher logits must be (1,1,96,96), got " +
                                       record.logits.shape().str());
  }
  if (!record.logits.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "teacher logits for annotation " +
                                           std::to_string(record.annotation_id) + " are not finite");
  }
  if (!(record.confidence >= 0.0f && record.confidence <= 1.0f)) {
    throw Error(ErrorCode::kInvalidArgument, "teacher confidence must lie in [0, 1]");
  }
}

std::vector<std::uint8_t> serialize_cache(std::span<const TeacherRecord> records) {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const TeacherRecord& rec : records) {
    validate(rec);
    w.u64(rec.annotation_id);
    w.f32(rec.confidence);
    w.f32s(rec.logits.data());
  }
  return w.bytes();
}

std::vector<TeacherRecord> deserialize_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not a PTC1 teacher cache");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kFormat, "unsupported PTC1 version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<TeacherRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TeacherRecord rec;
    rec.annotation_id = r.u64();
    rec.confidence = r.f32();
    r.f32s(rec.logits.data());
    validate(rec);
    records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, std::to_string(r.remaining()) + " trailing bytes in cache");
  }
  return records;
}

void write_cache(std::span<const TeacherRecord> records, const std::filesystem::path& path) {
  write_file(path, serialize_cache(records));
}

std::vector<TeacherRecord> read_cache(const std::filesystem::path& path) {
  return deserialize_cache(read_file(path));
}

std::vector<TeacherRecord> synth_cache(std::uint64_t seed, int count) {
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "synth_cache: count must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(32.0, 64.0);
  std::uniform_real_distribution<double> radius(14.0, 30.0);
  std::uniform_real_distribution<double> conf(0.6, 1.0);
  const CropRect full{0.0, 0.0, kTeacherSize, kTeacherSize, {kTeacherSize, kTeacherSize}};
  std::vector<TeacherRecord> records;
  records.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double cx = centre(rng), cy = centre(rng), rad = radius(rng);
    const synth::Polygon poly = synth::random_shape(rng, cx, cy, rad);
    TeacherRecord rec;
    rec.annotation_id = static_cast<std::uint64_t>(i + 1);
    rec.logits = synth::distance_logits(poly, full, kTeacherSize);
    rec.confidence = static_cast<float>(conf(rng));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace picoseg
