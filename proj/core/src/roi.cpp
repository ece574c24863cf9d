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

#include "picoseg/roi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "picoseg/error.hpp"

namespace picoseg {

namespace {

std::string describe(const BBox& b) {
  return "[" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " + std::to_string(b.w) +
         ", " + std::to_string(b.h) + "]";
}

void check_rect_within(const CropRect& r, int width, int height) {
  const bool ok = r.x1 >= 0.0 && r.y1 >= 0.0 && r.x1 < r.x2 && r.y1 < r.y2 &&
                  r.x2 <= static_cast<double>(width) && r.y2 <= static_cast<double>(height);
  if (!ok) {
    throw Error(ErrorCode::kRoi, "crop rect (" + std::to_string(r.x1) + ", " +
                                     std::to_string(r.y1) + ", " + std::to_string(r.x2) + ", " +
                                     std::to_string(r.y2) + ") outside " + std::to_string(width) +
                                     "x" + std::to_string(height) + " source");
  }
}

// Centre-sampled source coordinate for destination index `d`.
double source_coord(int d, int src_extent, int dst_extent) {
  return (static_cast<double>(d) + 0.5) * src_extent / dst_extent - 0.5;
}

int nearest_index(int d, int src_extent, int dst_extent) {
  const double pos = (static_cast<double>(d) + 0.5) * src_extent / dst_extent;
  return std::clamp(static_cast<int>(std::floor(pos)), 0, src_extent - 1);
}

}  // namespace

void validate(const BBox& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0) || !std::isfinite(box.x) || !std::isfinite(box.y) ||
      !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(ErrorCode::kRoi, "box must have positive finite width/height, got " + describe(box));
  }
}

void validate(const PromptConfig& cfg) {
  if (!(cfg.padding >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "prompt padding must be >= 0");
  }
  if (cfg.target_size < 8) {
    throw Error(ErrorCode::kInvalidArgument, "prompt target size must be >= 8");
  }
}

CropRect make_square_roi(const BBox& box, const PromptConfig& cfg, Extent image) {
  validate(box);
  validate(cfg);
  if (!(image.width > 0.0) || !(image.height > 0.0)) {
    throw Error(ErrorCode::kRoi, "image extent must be positive");
  }
  if (box.x >= image.width || box.y >= image.height || box.x + box.w <= 0.0 ||
      box.y + box.h <= 0.0) {
    throw Error(ErrorCode::kRoi, "box " + describe(box) + " lies entirely outside the image");
  }

  const double padded_w = box.w * (1.0 + 2.0 * cfg.padding);
  const double padded_h = box.h * (1.0 + 2.0 * cfg.padding);
  const double side = std::max(padded_w, padded_h);
  const double cx = box.x + box.w / 2.0;
  const double cy = box.y + box.h / 2.0;

  CropRect r;
  r.x1 = cx - side / 2.0;
  r.y1 = cy - side / 2.0;
  r.x2 = r.x1 + side;
  r.y2 = r.y1 + side;

  r.x1 = std::max(0.0, r.x1);
  r.y1 = std::max(0.0, r.y1);
  r.x2 = std::min(image.width, r.x2);
  r.y2 = std::min(image.height, r.y2);
  r.source = image;

  if (!(r.x2 > r.x1) || !(r.y2 > r.y1)) {
    throw Error(ErrorCode::kRoi, "crop for box " + describe(box) + " has zero area after clamping");
  }
  return r;
}

PixelWindow pixel_window(const CropRect& rect) {
  const int src_w = static_cast<int>(std::ceil(rect.source.width));
  const int src_h = static_cast<int>(std::ceil(rect.source.height));
  const int x0 = std::clamp(static_cast<int>(std::floor(rect.x1)), 0, src_w);
  const int y0 = std::clamp(static_cast<int>(std::floor(rect.y1)), 0, src_h);
  const int x1 = std::clamp(static_cast<int>(std::ceil(rect.x2)), 0, src_w);
  const int y1 = std::clamp(static_cast<int>(std::ceil(rect.y2)), 0, src_h);
  return PixelWindow{x0, y0, x1 - x0, y1 - y0};
}

Tensor crop_resize_image(const Tensor& image, const CropRect& rect, int size) {
  const Shape& s = image.shape();
  if (s.n != 1) throw Error(ErrorCode::kShape, "crop_resize_image expects batch 1, got " + s.str());
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "target size must be >= 1");
  check_rect_within(rect, s.w, s.h);
  CropRect bounded = rect;
  bounded.source = Extent{static_cast<double>(s.w), static_cast<double>(s.h)};
  const PixelWindow win = pixel_window(bounded);

  Tensor out(Shape{1, s.c, size, size});
  for (int c = 0; c < s.c; ++c) {
    const float* src = image.plane(0, c);
    float* dst = out.plane(0, c);
    for (int oy = 0; oy < size; ++oy) {
      const double sy = std::clamp(source_coord(oy, win.height, size), 0.0,
                                   static_cast<double>(win.height - 1));
      const int y0 = static_cast<int>(std::floor(sy));
      const int y1 = std::min(y0 + 1, win.height - 1);
      const double fy = sy - y0;
      const float* row0 = src + static_cast<std::size_t>(win.y0 + y0) * s.w + win.x0;
      const float* row1 = src + static_cast<std::size_t>(win.y0 + y1) * s.w + win.x0;
      for (int ox = 0; ox < size; ++ox) {
        const double sx = std::clamp(source_coord(ox, win.width, size), 0.0,
                                     static_cast<double>(win.width - 1));
        const int x0 = static_cast<int>(std::floor(sx));
        const int x1 = std::min(x0 + 1, win.width - 1);
        const double fx = sx - x0;
        const double top = row0[x0] + fx * (static_cast<double>(row0[x1]) - row0[x0]);
        const double bot = row1[x0] + fx * (static_cast<double>(row1[x1]) - row1[x0]);
        dst[static_cast<std::size_t>(oy) * size + ox] = static_cast<float>(top + fy * (bot - top));
      }
    }
  }
  return out;
}

void normalize_input(Tensor& crop) {
  static constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
  static constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};
  const Shape& s = crop.shape();
  if (s.c != 3) throw Error(ErrorCode::kShape, "normalize_input expects 3 channels, got " + s.str());
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < 3; ++c) {
      float* p = crop.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] = (p[i] - kMean[c]) / kStd[c];
    }
  }
}

Tensor crop_resize_mask(const Tensor& mask, const CropRect& rect, int size) {
  const Shape& s = mask.shape();
  if (s.n != 1 || s.c != 1) {
    throw Error(ErrorCode::kShape, "crop_resize_mask expects (1,1,H,W), got " + s.str());
  }
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "target size must be >= 1");
  for (float v : mask.data()) {
    if (v != 0.0f && v != 1.0f) {
      throw Error(ErrorCode::kInvalidArgument, "crop_resize_mask: mask is not binary");
    }
  }
  check_rect_within(rect, s.w, s.h);
  CropRect bounded = rect;
  bounded.source = Extent{static_cast<double>(s.w), static_cast<double>(s.h)};
  const PixelWindow win = pixel_window(bounded);

  Tensor out(Shape{1, 1, size, size});
  for (int oy = 0; oy < size; ++oy) {
    const int sy = win.y0 + nearest_index(oy, win.height, size);
    for (int ox = 0; ox < size; ++ox) {
      const int sx = win.x0 + nearest_index(ox, win.width, size);
      out.at(0, 0, oy, ox) = mask.at(0, 0, sy, sx);
    }
  }
  return out;
}

BBox display_to_sensor(const BBox& box, Extent display, Extent sensor) {
  if (!(display.width > 0.0) || !(display.height > 0.0) || !(sensor.width > 0.0) ||
      !(sensor.height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "display and sensor extents must be positive");
  }
  validate(box);
  constexpr double kSlack = 1e-9;
  if (box.x < -kSlack || box.y < -kSlack || box.x + box.w > display.width + kSlack ||
      box.y + box.h > display.height + kSlack) {
    throw Error(ErrorCode::kRoi, "box " + describe(box) + " exceeds the display extent");
  }
  const double sx = sensor.width / display.width;
  const double sy = sensor.height / display.height;
  return BBox{box.x * sx, box.y * sy, box.w * sx, box.h * sy};
}

Mask postprocess_mask(const Tensor& logits, const CropRect& rect) {
  const Shape& s = logits.shape();
  if (s.n != 1 || s.c != 1 || s.h != s.w) {
    throw Error(ErrorCode::kShape, "postprocess_mask expects (1,1,S,S) logits, got " + s.str());
  }
  const PixelWindow win = pixel_window(rect);
  if (win.width < 1 || win.height < 1) {
    throw Error(ErrorCode::kRoi, "postprocess_mask: empty crop window");
  }
  Mask out(win.height, win.width);
  for (int r = 0; r < win.height; ++r) {
    const int src_row = nearest_index(r, s.h, win.height);
    for (int c = 0; c < win.width; ++c) {
      const int src_col = nearest_index(c, s.w, win.width);
      out.at(r, c) = logits.at(0, 0, src_row, src_col) > 0.0f ? 1 : 0;
    }
  }
  return out;
}

}  // namespace picoseg
