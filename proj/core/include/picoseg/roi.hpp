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

#include "picoseg/mask.hpp"
#include "picoseg/tensor.hpp"

namespace picoseg {

/// COCO-style box: top-left corner plus width/height, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BBox&) const = default;
};

/// Width/height of an image or display surface.
struct Extent {
  double width = 0.0;
  double height = 0.0;
};

/// Crop window in source pixels; 0 <= x1 < x2 <= W and 0 <= y1 < y2 <= H.
struct CropRect {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  Extent source;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
};

/// Integer pixel window used for extraction: floor(x1), floor(y1),
/// ceil(x2), ceil(y2), clipped to the source extent.
struct PixelWindow {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct PromptConfig {
  double padding = 0.1;
  int target_size = 96;
};

void validate(const BBox& box);
void validate(const PromptConfig& cfg);

/// Pads the box by `padding` on each side, squares it around the box centre
/// and clamps the corners to the image.
CropRect make_square_roi(const BBox& box, const PromptConfig& cfg, Extent image);

PixelWindow pixel_window(const CropRect& rect);

/// Bilinear resize of the rect's pixel window of a (1, 3, H, W) image to
/// (1, 3, S, S). Samples at pixel centres (align-corners = false).
Tensor crop_resize_image(const Tensor& image, const CropRect& rect, int size);

/// Per-channel (x - mean) / std with the ImageNet statistics, applied to the
/// [0, 1] crop before it enters the network.
void normalize_input(Tensor& crop);

/// Nearest-neighbour resize of a binary (1, 1, H, W) mask window to (1, 1, S, S).
Tensor crop_resize_mask(const Tensor& mask, const CropRect& rect, int size);

/// Per-axis scaling of a display-space box into sensor space.
BBox display_to_sensor(const BBox& box, Extent display, Extent sensor);

/// Thresholds (1, 1, S, S) logits at > 0 and resizes the result to the
/// rect's pixel window with nearest-neighbour sampling.
Mask postprocess_mask(const Tensor& logits, const CropRect& rect);

}  // namespace picoseg
