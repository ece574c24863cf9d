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
#include <filesystem>
#include <span>
#include <vector>

#include "picoseg/tensor.hpp"

namespace picoseg {

/// Cached logits are always stored at this resolution.
inline constexpr int kTeacherSize = 96;

/// Cached teacher prediction for one annotation.
struct TeacherRecord {
  std::uint64_t annotation_id = 0;
  Tensor logits{Shape{1, 1, kTeacherSize, kTeacherSize}};
  float confidence = 0.0f;

  bool operator==(const TeacherRecord&) const = default;
};

/// Throws if the logits are not (1,1,96,96) and finite or the confidence
/// leaves [0, 1].
void validate(const TeacherRecord& record);

// PTC1 cache files.
std::vector<std::uint8_t> serialize_cache(std::span<const TeacherRecord> records);
std::vector<TeacherRecord> deserialize_cache(std::span<const std::uint8_t> bytes);
void write_cache(std::span<const TeacherRecord> records, const std::filesystem::path& path);
std::vector<TeacherRecord> read_cache(const std::filesystem::path& path);

/// Stand-in teacher: one random shape per record, logits are the scaled
/// signed distance to its outline, confidence uniform in [0.6, 1.0].
std::vector<TeacherRecord> synth_cache(std::uint64_t seed, int count);

}  // namespace picoseg
