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
#include <random>
#include <vector>

#include "picoseg/coco.hpp"
#include "picoseg/roi.hpp"
#include "picoseg/teacher_cache.hpp"
#include "picoseg/trainer.hpp"
#include "picoseg/tensor.hpp"

namespace picoseg::synth {

/// Closed polygon as a flat x0,y0,x1,y1,... list (COCO layout).
using Polygon = std::vector<double>;

struct SceneObject {
  Polygon polygon;
  BBox bbox;
};

struct Scene {
  Tensor image;  // (1, 3, H, W), values in [0, 1]
  std::vector<SceneObject> objects;
};

/// Random disc, ellipse, rectangle or triangle, returned as a polygon.
Polygon random_shape(std::mt19937_64& rng, double cx, double cy, double radius);

/// Positive inside the polygon, negative outside; magnitude is the distance
/// to the nearest edge.
double signed_distance(const Polygon& polygon, double x, double y);

BBox polygon_bbox(const Polygon& polygon);

/// One shape on a noisy background.
Scene make_scene(std::mt19937_64& rng, int width, int height);

/// Teacher logits over the rect's pixel window resampled to size x size:
/// signed distance in crop pixels times `scale`, clipped to +-8.
Tensor distance_logits(const Polygon& polygon, const CropRect& rect, int size, double scale = 0.25);

/// `count` single-object scenes cropped with the default prompt geometry to
/// the teacher resolution.
std::vector<TrainingSample> training_set(std::uint64_t seed, int count);

struct DatasetFiles {
  std::filesystem::path annotations;
  std::filesystem::path cache;
  std::vector<std::filesystem::path> images;
  std::vector<std::filesystem::path> masks;
};

/// Writes `count` scenes as PPM images, PGM ground-truth masks, a COCO-style
/// annotations.json and a PTC1 teacher cache under `dir`.
DatasetFiles write_dataset(std::uint64_t seed, int count, const std::filesystem::path& dir,
                           int width = 160, int height = 120);

}  // namespace picoseg::synth
