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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picoseg/mask.hpp"
#include "picoseg/roi.hpp"

namespace picoseg {

/// Uncompressed COCO RLE: column-major runs, alternating, zeros first.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const RleMask&) const = default;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  BBox bbox;
  std::vector<std::vector<double>> polygons;  // flat x,y lists; empty if rle is set
  std::optional<RleMask> rle;

  /// Rasterizes the segmentation at the given image size.
  Mask to_mask(int height, int width) const;
};

struct ImageInfo {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct AnnotationSet {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  std::vector<std::string> warnings;  // one per skipped entry

  const ImageInfo* find_image(std::int64_t id) const;
};

/// Reads a COCO-instances JSON subset. Malformed annotations are skipped and
/// counted in `warnings`; a missing "images"/"annotations" array throws.
AnnotationSet parse_annotations(const std::filesystem::path& json_path);
AnnotationSet parse_annotations_text(const std::string& json_text);

/// Writes images + annotations (polygons or uncompressed RLE) as COCO JSON.
void write_annotations(const AnnotationSet& set, const std::filesystem::path& json_path);

Mask decode_rle(int height, int width, std::span<const std::uint32_t> counts);
RleMask encode_rle(const Mask& mask);

/// Pixel (r, c) is set iff its centre (c + 0.5, r + 0.5) lies inside any
/// polygon under the even-odd rule.
Mask rasterize_polygon(int height, int width, const std::vector<std::vector<double>>& polygons);

/// |a & b| / |a | b|; 1 when both are empty.
double iou(const Mask& a, const Mask& b);

struct InstanceScore {
  std::int64_t id = 0;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<InstanceScore> per_instance;
  double miou = 0.0;
  double map = 0.0;
  std::vector<double> thresholds;

  std::string to_json() const;
};

/// 0.50, 0.55, ..., 0.95, each computed as k / 20.
std::vector<double> default_thresholds();

/// miou is the mean IoU; map is the mean over thresholds of the fraction of
/// instances with IoU >= threshold (one mask per prompt, no ranking).
EvalReport evaluate(std::span<const Mask> predictions, std::span<const Mask> references,
                    std::span<const std::int64_t> ids = {});
EvalReport evaluate_scores(std::vector<InstanceScore> scores);

}  // namespace picoseg
