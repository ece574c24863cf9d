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

#include "picoseg/mask.hpp"
#include "picoseg/tensor.hpp"

namespace picoseg {

/// Binary PPM (P6, maxval <= 255) -> (1, 3, H, W) with values in [0, 1].
/// Anything else throws kUnsupportedMedia.
Tensor decode_ppm(std::span<const std::uint8_t> bytes);
Tensor read_ppm(const std::filesystem::path& path);

/// (1, 3, H, W) in [0, 1] -> P6; values are clamped and rounded to 8 bits.
std::vector<std::uint8_t> encode_ppm(const Tensor& image);
void write_ppm(const Tensor& image, const std::filesystem::path& path);

/// Binary mask -> P5 with foreground 255.
std::vector<std::uint8_t> encode_pgm(const Mask& mask);
void write_pgm(const Mask& mask, const std::filesystem::path& path);

/// P5 -> mask, foreground where the sample is >= half of maxval.
Mask decode_pgm(std::span<const std::uint8_t> bytes);

}  // namespace picoseg
