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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "picoseg/roi.hpp"

namespace picoseg::test {

struct RoiPropertyCounts {
  int cases = 0;
  int square_failures = 0;
  int translation_failures = 0;
  int scale_failures = 0;
};

inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline bool rect_close(const CropRect& a, const CropRect& b, double tol) {
  return close(a.x1, b.x1, tol) && close(a.y1, b.y1, tol) && close(a.x2, b.x2, tol) &&
         close(a.y2, b.y2, tol);
}

// Boxes whose padded square (and its shifted copy) stays inside a 640x480
// frame, so no clamping is involved.
inline RoiPropertyCounts roi_properties(std::uint64_t seed, int count, double tol = 1e-9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> size(4.0, 120.0), shift(-25.0, 25.0), scale(0.25, 4.0),
      pad(0.0, 0.5), unit(0.0, 1.0);
  const Extent image{640.0, 480.0};
  RoiPropertyCounts out;
  while (out.cases < count) {
    PromptConfig cfg;
    cfg.padding = pad(rng);
    const double w = size(rng), h = size(rng);
    const double side = std::max(w, h) * (1.0 + 2.0 * cfg.padding);
    const double margin = 26.0;
    const double free_x = image.width - side - 2 * margin, free_y = image.height - side - 2 * margin;
    if (free_x <= 0 || free_y <= 0) continue;
    const double cx = margin + side / 2 + unit(rng) * free_x;
    const double cy = margin + side / 2 + unit(rng) * free_y;
    const BBox box{cx - w / 2, cy - h / 2, w, h};
    ++out.cases;

    const CropRect r = make_square_roi(box, cfg, image);
    if (!close(r.width(), side, tol) || !close(r.height(), side, tol) ||
        std::abs((r.x1 + r.x2) / 2 - cx) > 0.5 || std::abs((r.y1 + r.y2) / 2 - cy) > 0.5) {
      ++out.square_failures;
    }

    const double dx = shift(rng), dy = shift(rng);
    const CropRect t = make_square_roi(BBox{box.x + dx, box.y + dy, w, h}, cfg, image);
    CropRect want = r;
    want.x1 += dx, want.x2 += dx, want.y1 += dy, want.y2 += dy;
    if (!rect_close(t, want, tol)) ++out.translation_failures;

    const double k = scale(rng);
    const CropRect s = make_square_roi(BBox{box.x * k, box.y * k, w * k, h * k}, cfg,
                                       Extent{image.width * k, image.height * k});
    const CropRect scaled{r.x1 * k, r.y1 * k, r.x2 * k, r.y2 * k, {}};
    if (!rect_close(s, scaled, tol)) ++out.scale_failures;
  }
  return out;
}

}  // namespace picoseg::test
