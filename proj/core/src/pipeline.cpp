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

#include "picoseg/pipeline.hpp"

#include <chrono>

#include "picoseg/error.hpp"

namespace picoseg {

ModelInfo model_info(const NetSpec& spec, bool quantized) {
  ModelInfo info;
  info.params = param_count(spec);
  info.macs = count_macs(spec);
  info.size_bytes = quantized ? psq1_size(spec) : psw1_size(spec);
  info.quantized = quantized;
  return info;
}

Segmenter::Segmenter(std::string label, Predictor predictor, ModelInfo info, PromptConfig prompt)
    : label_(std::move(label)), predictor_(std::move(predictor)), info_(info), prompt_(prompt) {
  validate(prompt_);
  if (!predictor_) throw Error(ErrorCode::kInvalidArgument, "Segmenter needs a predictor");
}

Segmenter Segmenter::fp32(WeightStore weights, PromptConfig prompt) {
  if (prompt.target_size != weights.spec().input_size) {
    throw Error(ErrorCode::kInvalidArgument, "prompt target size must equal the network input size");
  }
  const ModelInfo info = model_info(weights.spec(), false);
  auto shared = std::make_shared<const WeightStore>(std::move(weights));
  return Segmenter("fp32", [shared](const Tensor& crop) { return forward(*shared, crop); }, info,
                   prompt);
}

Segmenter Segmenter::int8(QuantizedModel model, PromptConfig prompt) {
  if (prompt.target_size != model.spec().input_size) {
    throw Error(ErrorCode::kInvalidArgument, "prompt target size must equal the network input size");
  }
  const ModelInfo info = model_info(model.spec(), true);
  auto shared = std::make_shared<const QuantizedModel>(std::move(model));
  return Segmenter("int8", [shared](const Tensor& crop) { return quantized_forward(*shared, crop); },
                   info, prompt);
}

SegmentResult Segmenter::segment(const Tensor& image, const BBox& box) const {
  const Shape& s = image.shape();
  const CropRect rect =
      make_square_roi(box, prompt_, Extent{static_cast<double>(s.w), static_cast<double>(s.h)});
  return segment_rect(image, rect);
}

SegmentResult Segmenter::segment_rect(const Tensor& image, const CropRect& rect) const {
  const auto t0 = std::chrono::steady_clock::now();
  Tensor crop = crop_resize_image(image, rect, prompt_.target_size);
  normalize_input(crop);
  const Tensor logits = predictor_(crop);
  SegmentResult r;
  r.rect = rect;
  r.window = pixel_window(rect);
  r.mask = postprocess_mask(logits, rect);
  r.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Mask paste_mask(const Mask& window_mask, const PixelWindow& window, int height, int width) {
  if (window_mask.height != window.height || window_mask.width != window.width) {
    throw Error(ErrorCode::kShape, "paste_mask: mask does not match its window");
  }
  Mask out(height, width);
  for (int r = 0; r < window.height; ++r) {
    const int y = window.y0 + r;
    if (y < 0 || y >= height) continue;
    for (int c = 0; c < window.width; ++c) {
      const int x = window.x0 + c;
      if (x >= 0 && x < width) out.at(y, x) = window_mask.at(r, c);
    }
  }
  return out;
}

}  // namespace picoseg
