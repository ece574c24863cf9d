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
#include <vector>

#include "picoseg/tensor.hpp"

namespace picoseg {

/// Binary mask stored row-major, one byte per pixel (0 or 1).
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  std::size_t area() const;

  bool operator==(const Mask&) const = default;
};

Tensor mask_to_tensor(const Mask& mask);
/// Any value > 0.5 becomes foreground.
Mask tensor_to_mask(const Tensor& t);

/// Copies rows [y0, y0+h) x cols [x0, x0+w); pixels outside the source are 0.
Mask crop_mask(const Mask& mask, int x0, int y0, int w, int h);

}  // namespace picoseg
