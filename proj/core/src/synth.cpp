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

#include "picoseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "picoseg/error.hpp"
#include "picoseg/image_io.hpp"
#include "picoseg/mask.hpp"

namespace picoseg::synth {

namespace {

constexpr int kDiscVertices = 32;

Polygon ellipse(double cx, double cy, double rx, double ry, double angle) {
  Polygon p;
  p.reserve(2 * kDiscVertices);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int i = 0; i < kDiscVertices; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kDiscVertices;
    const double x = rx * std::cos(t), y = ry * std::sin(t);
    p.push_back(cx + ca * x - sa * y);
    p.push_back(cy + sa * x + ca * y);
  }
  return p;
}

Polygon rotated_rect(double cx, double cy, double hw, double hh, double angle) {
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double corners[4][2] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  Polygon p;
  for (const auto& c : corners) {
    p.push_back(cx + ca * c[0] - sa * c[1]);
    p.push_back(cy + sa * c[0] + ca * c[1]);
  }
  return p;
}

bool inside(const Polygon& poly, double x, double y) {
  const std::size_t nv = poly.size() / 2;
  bool in = false;
  for (std::size_t i = 0, j = nv - 1; i < nv; j = i++) {
    const double xi = poly[2 * i], yi = poly[2 * i + 1];
    const double xj = poly[2 * j], yj = poly[2 * j + 1];
    if ((yi > y) != (yj > y) && x < xi + (y - yi) * (xj - xi) / (yj - yi)) in = !in;
  }
  return in;
}

std::string numbered(const char* stem, int i, const char* ext) {
  std::ostringstream os;
  os << stem << std::setw(4) << std::setfill('0') << i << ext;
  return os.str();
}

}  // namespace

Polygon random_shape(std::mt19937_64& rng, double cx, double cy, double radius) {
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> aspect(0.55, 1.0);
  switch (kind(rng)) {
    case 0:
      return ellipse(cx, cy, radius, radius, 0.0);
    case 1: {
      const double a = aspect(rng);
      return ellipse(cx, cy, radius, radius * a, angle(rng));
    }
    case 2: {
      const double a = aspect(rng);
      return rotated_rect(cx, cy, radius * 0.7, radius * 0.7 * a, angle(rng));
    }
    default: {
      const double rot = angle(rng);
      Polygon p;
      for (int k = 0; k < 3; ++k) {
        const double t = rot + 2.0 * std::numbers::pi * k / 3.0;
        p.push_back(cx + radius * std::cos(t));
        p.push_back(cy + radius * std::sin(t));
      }
      return p;
    }
  }
}

double signed_distance(const Polygon& poly, double x, double y) {
  if (poly.size() < 6 || poly.size() % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "signed_distance: polygon needs >= 3 vertices");
  }
  const std::size_t nv = poly.size() / 2;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = nv - 1; i < nv; j = i++) {
    const double ax = poly[2 * j], ay = poly[2 * j + 1];
    const double bx = poly[2 * i], by = poly[2 * i + 1];
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double px = ax + t * dx - x, py = ay + t * dy - y;
    best = std::min(best, std::sqrt(px * px + py * py));
  }
  return inside(poly, x, y) ? best : -best;
}

BBox polygon_bbox(const Polygon& poly) {
  double x0 = poly[0], x1 = poly[0], y0 = poly[1], y1 = poly[1];
  for (std::size_t i = 0; i + 1 < poly.size(); i += 2) {
    x0 = std::min(x0, poly[i]);
    x1 = std::max(x1, poly[i]);
    y0 = std::min(y0, poly[i + 1]);
    y1 = std::max(y1, poly[i + 1]);
  }
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

Scene make_scene(std::mt19937_64& rng, int width, int height) {
  if (width < 16 || height < 16) {
    throw Error(ErrorCode::kInvalidArgument, "make_scene: image must be at least 16x16");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double short_side = std::min(width, height);
  const double radius = short_side * (0.15 + 0.15 * unit(rng));
  const double cx = radius + (width - 2.0 * radius) * unit(rng);
  const double cy = radius + (height - 2.0 * radius) * unit(rng);
  Polygon poly = random_shape(rng, cx, cy, radius);

  float bg[3], fg[3];
  for (int c = 0; c < 3; ++c) bg[c] = static_cast<float>(0.15 + 0.4 * unit(rng));
  // Foreground differs from the background by at least 0.3 in one channel.
  const int strong = static_cast<int>(unit(rng) * 3.0) % 3;
  for (int c = 0; c < 3; ++c) {
    fg[c] = static_cast<float>(c == strong ? bg[c] + 0.3 + 0.15 * unit(rng) : 0.2 + 0.6 * unit(rng));
  }

  const Mask mask = rasterize_polygon(height, width, {poly});
  Scene scene{Tensor(Shape{1, 3, height, width}), {}};
  std::uniform_real_distribution<float> noise(-0.06f, 0.06f);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool on = mask.at(y, x) != 0;
      for (int c = 0; c < 3; ++c) {
        const float v = (on ? fg[c] : bg[c]) + noise(rng);
        scene.image.at(0, c, y, x) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  scene.objects.push_back({poly, polygon_bbox(poly)});
  return scene;
}

Tensor distance_logits(const Polygon& polygon, const CropRect& rect, int size, double scale) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "distance_logits: size must be >= 1");
  const PixelWindow win = pixel_window(rect);
  if (win.width < 1 || win.height < 1) {
    throw Error(ErrorCode::kRoi, "distance_logits: empty crop window");
  }
  const double px_per_src = static_cast<double>(size) / std::max(win.width, win.height);
  Tensor out(Shape{1, 1, size, size});
  for (int oy = 0; oy < size; ++oy) {
    const double y = win.y0 + (oy + 0.5) * win.height / size;
    for (int ox = 0; ox < size; ++ox) {
      const double x = win.x0 + (ox + 0.5) * win.width / size;
      const double d = signed_distance(polygon, x, y) * px_per_src * scale;
      out.at(0, 0, oy, ox) = static_cast<float>(std::clamp(d, -8.0, 8.0));
    }
  }
  return out;
}

namespace {

struct Sample {
  Scene scene;
  CropRect rect;
  Mask mask;
  TeacherRecord teacher;
};

Sample draw_sample(std::mt19937_64& rng, int width, int height, std::uint64_t id) {
  Sample s{make_scene(rng, width, height), {}, {}, {}};
  const SceneObject& obj = s.scene.objects.front();
  PromptConfig prompt;
  prompt.target_size = kTeacherSize;
  s.rect = make_square_roi(obj.bbox, prompt,
                           Extent{static_cast<double>(width), static_cast<double>(height)});
  s.mask = rasterize_polygon(height, width, {obj.polygon});
  s.teacher.annotation_id = id;
  s.teacher.logits = distance_logits(obj.polygon, s.rect, kTeacherSize);
  std::uniform_real_distribution<double> conf(0.6, 1.0);
  s.teacher.confidence = static_cast<float>(conf(rng));
  return s;
}

}  // namespace

std::vector<TrainingSample> training_set(std::uint64_t seed, int count) {
  if (count < 1) throw Error(ErrorCode::kEmpty, "training_set: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<TrainingSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Sample s = draw_sample(rng, 160, 120, static_cast<std::uint64_t>(i + 1));
    TrainingSample t;
    t.image = crop_resize_image(s.scene.image, s.rect, kTeacherSize);
    normalize_input(t.image);
    t.target = crop_resize_mask(mask_to_tensor(s.mask), s.rect, kTeacherSize);
    t.teacher = std::move(s.teacher);
    out.push_back(std::move(t));
  }
  return out;
}

DatasetFiles write_dataset(std::uint64_t seed, int count, const std::filesystem::path& dir,
                           int width, int height) {
  if (count < 1) throw Error(ErrorCode::kEmpty, "write_dataset: count must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "masks", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::mt19937_64 rng(seed);
  DatasetFiles files;
  AnnotationSet set;
  std::vector<TeacherRecord> records;
  for (int i = 0; i < count; ++i) {
    const int id = i + 1;
    Sample s = draw_sample(rng, width, height, static_cast<std::uint64_t>(id));
    const std::string image_name = numbered("img_", id, ".ppm");
    files.images.push_back(dir / "images" / image_name);
    files.masks.push_back(dir / "masks" / numbered("mask_", id, ".pgm"));
    write_ppm(s.scene.image, files.images.back());
    write_pgm(s.mask, files.masks.back());

    set.images.push_back({id, image_name, width, height});
    Annotation ann;
    ann.id = id;
    ann.image_id = id;
    ann.bbox = s.scene.objects.front().bbox;
    ann.polygons = {s.scene.objects.front().polygon};
    set.annotations.push_back(std::move(ann));
    records.push_back(std::move(s.teacher));
  }
  files.annotations = dir / "annotations.json";
  files.cache = dir / "teacher_cache.ptc";
  write_annotations(set, files.annotations);
  write_cache(records, files.cache);
  return files;
}

}  // namespace picoseg::synth
