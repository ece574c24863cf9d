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
#include <functional>
#include <memory>
#include <string>

#include "picoseg/mask.hpp"
#include "picoseg/net.hpp"
#include "picoseg/quant.hpp"
#include "picoseg/roi.hpp"

namespace picoseg {

/// Size/cost summary of a loaded model.
struct ModelInfo {
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t size_bytes = 0;  // PSW1 or PSQ1 file size
  bool quantized = false;
};

ModelInfo model_info(const NetSpec& spec, bool quantized);

struct SegmentResult {
  CropRect rect;
  PixelWindow window;
  Mask mask;  // window-sized
  double latency_ms = 0.0;
};

/// Maps a (1, 3, S, S) crop to (1, 1, S, S) logits.
using Predictor = std::function<Tensor(const Tensor& crop)>;

/// Box-prompted segmentation: make_square_roi -> crop_resize_image ->
/// model -> postprocess_mask. Immutable once built, safe to share.
class Segmenter {
 public:
  Segmenter(std::string label, Predictor predictor, ModelInfo info, PromptConfig prompt = {});

  static Segmenter fp32(WeightStore weights, PromptConfig prompt = {});
  static Segmenter int8(QuantizedModel model, PromptConfig prompt = {});

  const std::string& label() const { return label_; }
  const ModelInfo& info() const { return info_; }
  const PromptConfig& prompt() const { return prompt_; }

  /// `image` is (1, 3, H, W); the box is in image pixels.
  SegmentResult segment(const Tensor& image, const BBox& box) const;

  /// Same pipeline with a precomputed rect.
  SegmentResult segment_rect(const Tensor& image, const CropRect& rect) const;

 private:
  std::string label_;
  Predictor predictor_;
  ModelInfo info_;
  PromptConfig prompt_;
};

/// Places a window-sized mask into an otherwise empty height x width frame.
Mask paste_mask(const Mask& window_mask, const PixelWindow& window, int height, int width);

}  // namespace picoseg
