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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picoseg/coco.hpp"
#include "picoseg/error.hpp"
#include "picoseg/pipeline.hpp"
#include "picoseg/roi.hpp"

namespace picoseg::cli {

using json = nlohmann::json;
using path = std::filesystem::path;

/// Model selection shared by infer/eval/serve. --quant wins over --weights;
/// with neither, a seeded He-uniform model is built when allowed.
struct ModelOptions {
  std::optional<path> weights;
  std::optional<path> quant;
  std::uint64_t seed = 42;
  bool allow_init = false;
};

Segmenter load_segmenter(const ModelOptions& opt);

/// "x,y,w,h" -> BBox (kInvalidArgument on anything else).
BBox parse_bbox(const std::string& text);

struct InferOptions {
  ModelOptions model;
  path image;
  std::string bbox;
  path out = "mask.pgm";
};
/// Writes the window-resolution PGM mask and `<out>.json`; returns the sidecar.
json cmd_infer(const InferOptions& opt);

struct EvalOptions {
  ModelOptions model;
  path annotations;
  path images_dir;
  bool oracle = false;  // predict the reference mask (harness self-check)
};
json cmd_eval(const EvalOptions& opt);

struct QuantizeOptions {
  path weights;
  path out = "model.psq";
  int batches = 10;
  int batch_size = 2;
  std::uint64_t seed = 42;
  std::optional<path> annotations;  // calibrate on annotated crops instead of synthetic ones
  std::optional<path> images_dir;
};
json cmd_quantize(const QuantizeOptions& opt);

struct CountOptions {
  int size = 96;
};
json cmd_count(const CountOptions& opt);

struct FitHeadOptions {
  std::optional<path> weights;
  std::optional<path> annotations;
  std::optional<path> images_dir;
  std::optional<path> cache;
  path out = "head.psw";
  int count = 32;
  int steps = 200;
  double lr = 3e-4;
  std::uint64_t seed = 42;
};
json cmd_fit_head(const FitHeadOptions& opt);

struct MakeCacheOptions {
  std::optional<path> annotations;
  path out = "teacher_cache.ptc";
  int count = 32;
  std::uint64_t seed = 42;
};
json cmd_make_cache(const MakeCacheOptions& opt);

struct SynthDataOptions {
  path out = "synth";
  int count = 32;
  int width = 160;
  int height = 120;
  std::uint64_t seed = 7;
};
json cmd_synth_data(const SynthDataOptions& opt);

struct InitOptions {
  path out = "init.psw";
  std::uint64_t seed = 42;
};
json cmd_init(const InitOptions& opt);

/// Full command line. Reports go to `out`; failures print a JSON error to
/// `err` and return a non-zero code (2 for usage, 10 + error code for
/// library errors, 1 otherwise).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorCode code);

}  // namespace picoseg::cli
