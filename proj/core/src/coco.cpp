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

#include "picoseg/coco.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "picoseg/error.hpp"

namespace picoseg {

namespace {

using json = nlohmann::json;

bool valid_polygon(const json& poly) {
  if (!poly.is_array() || poly.size() < 6 || poly.size() % 2 != 0) return false;
  return std::all_of(poly.begin(), poly.end(), [](const json& v) { return v.is_number(); });
}

// Returns an error description, or empty on success.
std::string parse_one(const json& a, Annotation& out) {
  if (!a.is_object()) return "annotation is not an object";
  if (!a.contains("id") || !a["id"].is_number_integer()) return "missing integer id";
  out.id = a["id"].get<std::int64_t>();
  if (!a.contains("image_id") || !a["image_id"].is_number_integer()) return "missing image_id";
  out.image_id = a["image_id"].get<std::int64_t>();

  if (!a.contains("bbox") || !a["bbox"].is_array() || a["bbox"].size() != 4) return "bad bbox";
  for (const json& v : a["bbox"]) {
    if (!v.is_number()) return "bad bbox";
  }
  out.bbox = BBox{a["bbox"][0].get<double>(), a["bbox"][1].get<double>(),
                  a["bbox"][2].get<double>(), a["bbox"][3].get<double>()};
  if (!(out.bbox.w > 0.0) || !(out.bbox.h > 0.0)) return "bbox has zero area";

  if (!a.contains("segmentation")) return "missing segmentation";
  const json& seg = a["segmentation"];
  if (seg.is_array()) {
    if (seg.empty()) return "empty polygon list";
    for (const json& poly : seg) {
      if (!valid_polygon(poly)) return "polygon needs >= 3 vertices";
      out.polygons.push_back(poly.get<std::vector<double>>());
    }
    return {};
  }
  if (seg.is_object()) {
    if (!seg.contains("size") || !seg["size"].is_array() || seg["size"].size() != 2) {
      return "RLE without size";
    }
    if (!seg.contains("counts")) return "RLE without counts";
    if (seg["counts"].is_string()) return "compressed RLE is not supported";
    if (!seg["counts"].is_array()) return "RLE counts must be an array";
    RleMask rle;
    rle.height = seg["size"][0].get<int>();
    rle.width = seg["size"][1].get<int>();
    if (rle.height < 1 || rle.width < 1) return "RLE size must be positive";
    std::uint64_t total = 0;
    for (const json& c : seg["counts"]) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 0) return "RLE counts must be >= 0";
      rle.counts.push_back(c.get<std::uint32_t>());
      total += rle.counts.back();
    }
    if (total != static_cast<std::uint64_t>(rle.height) * rle.width) {
      return "RLE counts do not sum to h*w";
    }
    out.rle = std::move(rle);
    return {};
  }
  return "unsupported segmentation type";
}

}  // namespace

Mask Annotation::to_mask(int height, int width) const {
  if (rle) {
    if (rle->height != height || rle->width != width) {
      throw Error(ErrorCode::kShape, "annotation " + std::to_string(id) +
                                         " RLE size does not match the image");
    }
    return decode_rle(rle->height, rle->width, rle->counts);
  }
  return rasterize_polygon(height, width, polygons);
}

const ImageInfo* AnnotationSet::find_image(std::int64_t id) const {
  for (const ImageInfo& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

AnnotationSet parse_annotations_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("annotation JSON does not parse: ") + e.what());
  }
  if (!root.is_object() || !root.contains("annotations") || !root["annotations"].is_array() ||
      !root.contains("images") || !root["images"].is_array()) {
    throw Error(ErrorCode::kFormat, "annotation JSON needs top-level 'images' and 'annotations' arrays");
  }

  AnnotationSet set;
  for (const json& img : root["images"]) {
    if (!img.is_object() || !img.contains("id") || !img["id"].is_number_integer()) {
      set.warnings.push_back("image entry without integer id");
      continue;
    }
    ImageInfo info;
    info.id = img["id"].get<std::int64_t>();
    info.file_name = img.value("file_name", std::string{});
    info.width = img.value("width", 0);
    info.height = img.value("height", 0);
    set.images.push_back(std::move(info));
  }
  for (const json& a : root["annotations"]) {
    Annotation ann;
    const std::string problem = parse_one(a, ann);
    if (!problem.empty()) {
      std::string id = a.is_object() && a.contains("id") ? a["id"].dump() : "?";
      set.warnings.push_back("annotation " + id + ": " + problem);
      continue;
    }
    set.annotations.push_back(std::move(ann));
  }
  return set;
}

AnnotationSet parse_annotations(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations_text(ss.str());
}

void write_annotations(const AnnotationSet& set, const std::filesystem::path& json_path) {
  json root;
  root["images"] = json::array();
  for (const ImageInfo& img : set.images) {
    root["images"].push_back(
        {{"id", img.id}, {"file_name", img.file_name}, {"width", img.width}, {"height", img.height}});
  }
  root["annotations"] = json::array();
  for (const Annotation& a : set.annotations) {
    json entry = {{"id", a.id},
                  {"image_id", a.image_id},
                  {"category_id", 1},
                  {"iscrowd", 0},
                  {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}};
    if (a.rle) {
      entry["segmentation"] = {{"size", {a.rle->height, a.rle->width}}, {"counts", a.rle->counts}};
    } else {
      entry["segmentation"] = a.polygons;
    }
    root["annotations"].push_back(std::move(entry));
  }
  root["categories"] = json::array({{{"id", 1}, {"name", "object"}}});
  std::ofstream out(json_path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + json_path.string());
  out << root.dump(1) << '\n';
}

Mask decode_rle(int height, int width, std::span<const std::uint32_t> counts) {
  if (height < 1 || width < 1) throw Error(ErrorCode::kShape, "decode_rle: size must be positive");
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  const std::uint64_t expected = static_cast<std::uint64_t>(height) * width;
  if (total != expected) {
    throw Error(ErrorCode::kFormat, "decode_rle: counts sum to " + std::to_string(total) +
                                        ", expected " + std::to_string(expected));
  }
  Mask m(height, width);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : counts) {
    for (std::uint32_t i = 0; i < run; ++i, ++pos) {
      // Column-major position -> row-major storage.
      const int col = static_cast<int>(pos / height);
      const int row = static_cast<int>(pos % height);
      m.at(row, col) = value;
    }
    value ^= 1;
  }
  return m;
}

RleMask encode_rle(const Mask& mask) {
  RleMask rle{mask.height, mask.width, {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.width; ++c) {
    for (int r = 0; r < mask.height; ++r) {
      const std::uint8_t v = mask.at(r, c) ? 1 : 0;
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

Mask rasterize_polygon(int height, int width, const std::vector<std::vector<double>>& polygons) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kShape, "rasterize_polygon: size must be positive");
  }
  Mask out(height, width);
  std::vector<double> crossings;
  for (const auto& poly : polygons) {
    if (poly.size() < 6 || poly.size() % 2 != 0) {
      throw Error(ErrorCode::kInvalidArgument, "rasterize_polygon: polygon needs >= 3 vertices");
    }
    const std::size_t nv = poly.size() / 2;
    for (int r = 0; r < height; ++r) {
      const double y = r + 0.5;
      crossings.clear();
      for (std::size_t i = 0, j = nv - 1; i < nv; j = i++) {
        const double xi = poly[2 * i], yi = poly[2 * i + 1];
        const double xj = poly[2 * j], yj = poly[2 * j + 1];
        if ((yi > y) != (yj > y)) crossings.push_back(xi + (y - yi) * (xj - xi) / (yj - yi));
      }
      std::sort(crossings.begin(), crossings.end());
      // Centre x is inside iff an odd number of crossings lie strictly right
      // of it, i.e. x in [crossings[2k], crossings[2k+1]).
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const int c0 = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)));
        const int c1 = std::min(width, static_cast<int>(std::ceil(crossings[k + 1] - 0.5)));
        for (int c = c0; c < c1; ++c) out.at(r, c) = 1;
      }
    }
  }
  return out;
}

double iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kShape, "iou: mask sizes differ");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += (a.data[i] & b.data[i]);
    uni += (a.data[i] | b.data[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 10; k <= 19; ++k) t.push_back(k / 20.0);
  return t;
}

EvalReport evaluate_scores(std::vector<InstanceScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmpty, "evaluate: no instances");
  EvalReport report;
  report.thresholds = default_thresholds();
  double sum = 0.0;
  for (const InstanceScore& s : scores) sum += s.iou;
  report.miou = sum / static_cast<double>(scores.size());
  double rate_sum = 0.0;
  for (double t : report.thresholds) {
    const auto hits = std::count_if(scores.begin(), scores.end(),
                                    [t](const InstanceScore& s) { return s.iou >= t; });
    rate_sum += static_cast<double>(hits) / static_cast<double>(scores.size());
  }
  report.map = rate_sum / static_cast<double>(report.thresholds.size());
  report.per_instance = std::move(scores);
  return report;
}

EvalReport evaluate(std::span<const Mask> predictions, std::span<const Mask> references,
                    std::span<const std::int64_t> ids) {
  if (predictions.size() != references.size()) {
    throw Error(ErrorCode::kShape, "evaluate: prediction/reference counts differ");
  }
  if (!ids.empty() && ids.size() != predictions.size()) {
    throw Error(ErrorCode::kShape, "evaluate: id count differs from instance count");
  }
  std::vector<InstanceScore> scores;
  scores.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::int64_t id = ids.empty() ? static_cast<std::int64_t>(i) : ids[i];
    scores.push_back({id, iou(predictions[i], references[i])});
  }
  return evaluate_scores(std::move(scores));
}

std::string EvalReport::to_json() const {
  json j;
  j["miou"] = miou;
  j["map"] = map;
  j["per_instance"] = json::array();
  for (const InstanceScore& s : per_instance) j["per_instance"].push_back({{"id", s.id}, {"iou", s.iou}});
  j["thresholds"] = thresholds;
  j["map_protocol"] = "threshold-averaged success rate, one mask per prompt";
  return j.dump(2);
}

}  // namespace picoseg
