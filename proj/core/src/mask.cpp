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

#include "picoseg/mask.hpp"

#include <algorithm>
#include <numeric>

#include "picoseg/error.hpp"

namespace picoseg {

std::size_t Mask::area() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

Tensor mask_to_tensor(const Mask& mask) {
  if (mask.height < 1 || mask.width < 1) {
    throw Error(ErrorCode::kShape, "mask_to_tensor: empty mask");
  }
  std::vector<float> values(mask.data.begin(), mask.data.end());
  return Tensor(Shape{1, 1, mask.height, mask.width}, std::move(values));
}

Mask tensor_to_mask(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.n != 1 || s.c != 1) {
    throw Error(ErrorCode::kShape, "tensor_to_mask expects (1,1,H,W), got " + s.str());
  }
  Mask m(s.h, s.w);
  auto src = t.data();
  for (std::size_t i = 0; i < src.size(); ++i) m.data[i] = src[i] > 0.5f ? 1 : 0;
  return m;
}

Mask crop_mask(const Mask& mask, int x0, int y0, int w, int h) {
  Mask out(h, w);
  for (int r = 0; r < h; ++r) {
    const int sr = y0 + r;
    if (sr < 0 || sr >= mask.height) continue;
    for (int c = 0; c < w; ++c) {
      const int sc = x0 + c;
      if (sc < 0 || sc >= mask.width) continue;
      out.at(r, c) = mask.at(sr, sc);
    }
  }
  return out;
}

}  // namespace picoseg
