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

#include "picoseg_cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "picoseg/error.hpp"
#include "picoseg/image_io.hpp"
#include "picoseg/net.hpp"
#include "picoseg/quant.hpp"
#include "picoseg/service.hpp"
#include "picoseg/synth.hpp"
#include "picoseg/teacher_cache.hpp"
#include "picoseg/trainer.hpp"
#include "picoseg_cli/http_server.hpp"

namespace picoseg::cli {

namespace {

void require_file(const path& p, const char* what) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    throw Error(ErrorCode::kIo, std::string(what) + " not found: " + p.string());
  }
}

void require_dir(const path& p, const char* what) {
  std::error_code ec;
  if (!std::filesystem::is_directory(p, ec)) {
    throw Error(ErrorCode::kIo, std::string(what) + " not found: " + p.string());
  }
}

void write_json(const path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "short write to " + p.string());
}

json rect_json(const CropRect& r) {
  return {{"x1", r.x1}, {"y1", r.y1}, {"x2", r.x2}, {"y2", r.y2}};
}

json window_json(const PixelWindow& w) {
  return {{"x", w.x0}, {"y", w.y0}, {"width", w.width}, {"height", w.height}};
}

json info_json(const Segmenter& s) {
  const ModelInfo& i = s.info();
  return {{"model", s.label()},
          {"params", i.params},
          {"macs", i.macs},
          {"size_bytes", i.size_bytes},
          {"quantized", i.quantized}};
}

// Loads every image referenced by the annotation set once.
class ImageCache {
 public:
  ImageCache(const AnnotationSet& set, path dir) : set_(set), dir_(std::move(dir)) {}

  const Tensor& get(std::int64_t image_id) {
    auto it = cache_.find(image_id);
    if (it != cache_.end()) return it->second;
    const ImageInfo* info = set_.find_image(image_id);
    if (!info) {
      throw Error(ErrorCode::kNotFound, "no image entry with id " + std::to_string(image_id));
    }
    Tensor img = read_ppm(dir_ / info->file_name);
    return cache_.emplace(image_id, std::move(img)).first->second;
  }

 private:
  const AnnotationSet& set_;
  path dir_;
  std::map<std::int64_t, Tensor> cache_;
};

std::vector<const Annotation*> sorted_annotations(const AnnotationSet& set) {
  std::vector<const Annotation*> v;
  for (const Annotation& a : set.annotations) v.push_back(&a);
  std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return v;
}

AnnotationSet load_annotations(const path& p) {
  require_file(p, "annotation file");
  AnnotationSet set = parse_annotations(p);
  for (const std::string& w : set.warnings) spdlog::warn("skipped {}", w);
  if (set.annotations.empty()) throw Error(ErrorCode::kEmpty, "no usable annotations in " + p.string());
  return set;
}

Tensor teacher_logits_for(const Annotation& ann, const Mask& gt, const CropRect& rect) {
  if (!ann.polygons.empty()) {
    // Union of polygons: take the largest signed distance.
    Tensor best = synth::distance_logits(ann.polygons.front(), rect, kTeacherSize);
    for (std::size_t i = 1; i < ann.polygons.size(); ++i) {
      const Tensor t = synth::distance_logits(ann.polygons[i], rect, kTeacherSize);
      for (std::size_t k = 0; k < t.size(); ++k) best.data()[k] = std::max(best.data()[k], t.data()[k]);
    }
    return best;
  }
  Tensor m = crop_resize_mask(mask_to_tensor(gt), rect, kTeacherSize);
  for (float& v : m.data()) v = v > 0.5f ? 4.0f : -4.0f;
  return m;
}

}  // namespace

int exit_code_for(ErrorCode code) { return 10 + static_cast<int>(code); }

Segmenter load_segmenter(const ModelOptions& opt) {
  if (opt.quant) {
    require_file(*opt.quant, "quantized model");
    return Segmenter::int8(import_int8(*opt.quant));
  }
  if (opt.weights) {
    require_file(*opt.weights, "weight file");
    return Segmenter::fp32(load_weights(*opt.weights));
  }
  if (!opt.allow_init) {
    throw Error(ErrorCode::kInvalidArgument, "--weights or --quant is required");
  }
  spdlog::warn("no weights given; using a seeded He-uniform model (seed {})", opt.seed);
  return Segmenter::fp32(build(NetSpec{}, opt.seed));
}

BBox parse_bbox(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "--bbox expects x,y,w,h numbers, got '" + text + "'");
    }
  }
  if (v.size() != 4) throw Error(ErrorCode::kInvalidArgument, "--bbox expects 4 values, got '" + text + "'");
  BBox box{v[0], v[1], v[2], v[3]};
  validate(box);
  return box;
}

json cmd_infer(const InferOptions& opt) {
  require_file(opt.image, "image");
  const BBox box = parse_bbox(opt.bbox);
  const Segmenter seg = load_segmenter(opt.model);
  const Tensor image = read_ppm(opt.image);
  const SegmentResult r = seg.segment(image, box);

  json side;
  side["latency_ms"] = r.latency_ms;
  side["rect"] = rect_json(r.rect);
  side["window"] = window_json(r.window);
  side["area"] = r.mask.area();
  side["params_used"] = info_json(seg);
  side["mask"] = opt.out.string();

  // With both files given, also run the float model and report agreement.
  if (opt.model.quant && opt.model.weights) {
    ModelOptions fp = opt.model;
    fp.quant.reset();
    const SegmentResult rf = load_segmenter(fp).segment(image, box);
    std::size_t same = 0;
    for (std::size_t i = 0; i < r.mask.data.size(); ++i) same += r.mask.data[i] == rf.mask.data[i];
    side["fp32_agreement"] = static_cast<double>(same) / static_cast<double>(r.mask.data.size());
  }

  write_pgm(r.mask, opt.out);
  write_json(path(opt.out).concat(".json"), side);
  return side;
}

json cmd_eval(const EvalOptions& opt) {
  const AnnotationSet set = load_annotations(opt.annotations);
  require_dir(opt.images_dir, "image directory");
  std::optional<Segmenter> seg;
  if (!opt.oracle) seg.emplace(load_segmenter(opt.model));
  const PromptConfig prompt = seg ? seg->prompt() : PromptConfig{};

  ImageCache images(set, opt.images_dir);
  std::vector<InstanceScore> scores;
  for (const Annotation* ann : sorted_annotations(set)) {
    const Tensor& img = images.get(ann->image_id);
    const int h = img.shape().h, w = img.shape().w;
    const Mask gt = ann->to_mask(h, w);
    const CropRect rect = make_square_roi(ann->bbox, prompt, Extent{static_cast<double>(w), static_cast<double>(h)});
    const PixelWindow win = pixel_window(rect);
    const Mask ref = crop_mask(gt, win.x0, win.y0, win.width, win.height);
    const Mask pred = seg ? seg->segment_rect(img, rect).mask : ref;
    scores.push_back({ann->id, iou(pred, ref)});
  }
  const EvalReport report = evaluate_scores(std::move(scores));
  json j = json::parse(report.to_json());
  j["model"] = seg ? seg->label() : "oracle";
  j["skipped"] = set.warnings.size();
  return j;
}

json cmd_quantize(const QuantizeOptions& opt) {
  require_file(opt.weights, "weight file");
  if (opt.batches < 1 || opt.batch_size < 1) {
    throw Error(ErrorCode::kEmpty, "calibration needs at least one batch of at least one image");
  }
  // (1) load the float model.
  const WeightStore weights = load_weights(opt.weights);
  const NetSpec& spec = weights.spec();

  CalibrationSet calib;
  if (opt.annotations) {
    if (!opt.images_dir) throw Error(ErrorCode::kInvalidArgument, "--ann needs --images-dir");
    const AnnotationSet set = load_annotations(*opt.annotations);
    ImageCache images(set, *opt.images_dir);
    const PromptConfig prompt;
    std::vector<Tensor> crops;
    for (const Annotation* ann : sorted_annotations(set)) {
      const Tensor& img = images.get(ann->image_id);
      const CropRect rect = make_square_roi(ann->bbox, prompt,
                                            Extent{static_cast<double>(img.shape().w), static_cast<double>(img.shape().h)});
      Tensor crop = crop_resize_image(img, rect, spec.input_size);
      normalize_input(crop);
      crops.push_back(std::move(crop));
    }
    const std::size_t per = static_cast<std::size_t>(opt.batch_size);
    for (std::size_t i = 0; i < crops.size() && calib.batches.size() < static_cast<std::size_t>(opt.batches); i += per) {
      const std::size_t n = std::min(per, crops.size() - i);
      Tensor batch(Shape{static_cast<int>(n), 3, spec.input_size, spec.input_size});
      for (std::size_t k = 0; k < n; ++k) {
        std::copy(crops[i + k].data().begin(), crops[i + k].data().end(),
                  batch.data().begin() + k * crops[i + k].size());
      }
      calib.batches.push_back(std::move(batch));
    }
  } else {
    calib = synthetic_calibration(opt.seed, opt.batches, opt.batch_size);
  }

  // (2) calibrate, (3) quantize, (4) export.
  const QuantizedModel model = quantize_model(weights, calib);
  export_int8(model, opt.out);

  const CalibrationSet held_out = synthetic_calibration(opt.seed + 1, 4, 1);
  const Divergence d = measure_divergence(weights, model, held_out.batches);
  const auto fp_bytes = psw1_size(spec);
  const auto q_bytes = static_cast<std::int64_t>(std::filesystem::file_size(opt.out));
  return json{{"out", opt.out.string()},
              {"calibration_batches", calib.batches.size()},
              {"psw1_bytes", fp_bytes},
              {"psq1_bytes", q_bytes},
              {"compression_ratio", static_cast<double>(fp_bytes) / static_cast<double>(q_bytes)},
              {"divergence",
               {{"inputs", held_out.batches.size()},
                {"mean_abs_logit_gap", d.mean_abs_logit_gap},
                {"max_abs_logit_gap", d.max_abs_logit_gap},
                {"sign_agreement", d.sign_agreement}}}};
}

json cmd_count(const CountOptions& opt) {
  NetSpec spec;
  spec.input_size = opt.size;
  spec.validate();
  const ModelInfo fp = model_info(spec, false);
  const ModelInfo q = model_info(spec, true);
  return json{{"input_size", spec.input_size},
              {"params", fp.params},
              {"macs", fp.macs},
              {"fp32_bytes", fp.size_bytes},
              {"int8_bytes", q.size_bytes},
              {"fingerprint", spec.fingerprint()}};
}

json cmd_fit_head(const FitHeadOptions& opt) {
  WeightStore weights = opt.weights ? (require_file(*opt.weights, "weight file"), load_weights(*opt.weights))
                                    : build(NetSpec{}, opt.seed);
  std::vector<TrainingSample> data;
  if (opt.annotations) {
    if (!opt.images_dir || !opt.cache) {
      throw Error(ErrorCode::kInvalidArgument, "--ann needs --images-dir and --cache");
    }
    require_file(*opt.cache, "teacher cache");
    const AnnotationSet set = load_annotations(*opt.annotations);
    std::map<std::uint64_t, TeacherRecord> teachers;
    for (TeacherRecord& r : read_cache(*opt.cache)) teachers.emplace(r.annotation_id, std::move(r));
    ImageCache images(set, *opt.images_dir);
    const PromptConfig prompt;
    for (const Annotation* ann : sorted_annotations(set)) {
      auto it = teachers.find(static_cast<std::uint64_t>(ann->id));
      if (it == teachers.end()) {
        throw Error(ErrorCode::kNotFound, "teacher cache has no record for annotation " + std::to_string(ann->id));
      }
      const Tensor& img = images.get(ann->image_id);
      const int h = img.shape().h, w = img.shape().w;
      const CropRect rect = make_square_roi(ann->bbox, prompt, Extent{static_cast<double>(w), static_cast<double>(h)});
      TrainingSample s;
      s.image = crop_resize_image(img, rect, kTeacherSize);
      normalize_input(s.image);
      s.target = crop_resize_mask(mask_to_tensor(ann->to_mask(h, w)), rect, kTeacherSize);
      s.teacher = it->second;
      data.push_back(std::move(s));
    }
  } else {
    data = synth::training_set(opt.seed, opt.count);
  }
  AdamWConfig adam;
  adam.lr = opt.lr;
  const FitResult fit = fit_head(weights, data, opt.steps, adam);
  save_weights(fit.weights, opt.out);
  json j{{"out", opt.out.string()}, {"samples", data.size()}, {"steps", opt.steps}, {"lr", opt.lr}};
  if (!fit.loss_trace.empty()) {
    const double head = head_mean(fit.loss_trace, 20), tail = tail_mean(fit.loss_trace, 20);
    j["initial_loss"] = fit.loss_trace.front();
    j["final_loss"] = fit.loss_trace.back();
    j["head20_mean"] = head;
    j["tail20_mean"] = tail;
    j["tail_over_head"] = tail / head;
  }
  j["loss_trace"] = fit.loss_trace;
  return j;
}

json cmd_make_cache(const MakeCacheOptions& opt) {
  std::vector<TeacherRecord> records;
  if (opt.annotations) {
    const AnnotationSet set = load_annotations(*opt.annotations);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> conf(0.6, 1.0);
    const PromptConfig prompt;
    for (const Annotation* ann : sorted_annotations(set)) {
      const ImageInfo* info = set.find_image(ann->image_id);
      if (!info || info->width < 1 || info->height < 1) {
        throw Error(ErrorCode::kNotFound, "annotation " + std::to_string(ann->id) + " has no sized image entry");
      }
      const Extent ext{static_cast<double>(info->width), static_cast<double>(info->height)};
      const CropRect rect = make_square_roi(ann->bbox, prompt, ext);
      TeacherRecord r;
      r.annotation_id = static_cast<std::uint64_t>(ann->id);
      r.logits = teacher_logits_for(*ann, ann->to_mask(info->height, info->width), rect);
      r.confidence = static_cast<float>(conf(rng));
      records.push_back(std::move(r));
    }
  } else {
    records = synth_cache(opt.seed, opt.count);
  }
  write_cache(records, opt.out);
  float lo = 1.0f, hi = 0.0f;
  for (const TeacherRecord& r : records) {
    lo = std::min(lo, r.confidence);
    hi = std::max(hi, r.confidence);
  }
  return json{{"out", opt.out.string()}, {"records", records.size()}, {"confidence_min", lo}, {"confidence_max", hi}};
}

json cmd_synth_data(const SynthDataOptions& opt) {
  const synth::DatasetFiles files = synth::write_dataset(opt.seed, opt.count, opt.out, opt.width, opt.height);
  return json{{"out", opt.out.string()},
              {"images", files.images.size()},
              {"annotations", files.annotations.string()},
              {"cache", files.cache.string()}};
}

json cmd_init(const InitOptions& opt) {
  const WeightStore w = build(NetSpec{}, opt.seed);
  save_weights(w, opt.out);
  return json{{"out", opt.out.string()}, {"seed", opt.seed}, {"params", param_count(w)}};
}

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("picoseg");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("PICOSEG_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::err);
  }
}

void emit(std::ostream& out, const std::optional<path>& report, const json& j) {
  if (report) write_json(*report, j);
  out << j.dump(2) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (!spdlog::get("picoseg")) configure_logging();

  CLI::App app{"picoseg: box-prompted segmentation toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  ModelOptions model;
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--weights", model.weights, "PSW1 float weights");
    sub->add_option("--quant", model.quant, "PSQ1 int8 model (takes precedence)");
    sub->add_option("--seed", model.seed, "Seed for the He-uniform fallback model");
  };

  InferOptions infer;
  auto* s_infer = app.add_subcommand("infer", "Segment one box prompt");
  add_model(s_infer);
  s_infer->add_option("--image", infer.image, "PPM image")->required();
  s_infer->add_option("--bbox", infer.bbox, "Box prompt x,y,w,h")->required();
  s_infer->add_option("--out", infer.out, "Mask PGM (sidecar JSON at <out>.json)");

  EvalOptions eval;
  std::optional<path> eval_report;
  auto* s_eval = app.add_subcommand("eval", "mIoU/mAP over a COCO-style annotation file");
  add_model(s_eval);
  s_eval->add_option("--ann", eval.annotations, "Annotation JSON")->required();
  s_eval->add_option("--images-dir", eval.images_dir, "Directory holding the PPM images")->required();
  s_eval->add_option("--out", eval_report, "Also write the report here");
  s_eval->add_flag("--oracle", eval.oracle, "Predict the reference masks (harness self-check)");

  QuantizeOptions quant;
  auto* s_quant = app.add_subcommand("quantize", "Post-training int8 quantization");
  s_quant->add_option("--weights", quant.weights, "PSW1 float weights")->required();
  s_quant->add_option("--out", quant.out, "PSQ1 output");
  s_quant->add_option("--batches", quant.batches, "Calibration batch count");
  s_quant->add_option("--batch-size", quant.batch_size, "Images per calibration batch");
  s_quant->add_option("--seed", quant.seed, "Seed for synthetic calibration data");
  s_quant->add_option("--ann", quant.annotations, "Calibrate on annotated crops");
  s_quant->add_option("--images-dir", quant.images_dir, "Images for --ann");

  CountOptions count;
  auto* s_count = app.add_subcommand("count", "Parameters, MACs and file sizes");
  s_count->add_option("--size", count.size, "Input resolution S");

  FitHeadOptions fit;
  auto* s_fit = app.add_subcommand("fit-head", "Train the 1x1 head with the distillation loss");
  s_fit->add_option("--weights", fit.weights, "Starting PSW1 weights (default: seeded init)");
  s_fit->add_option("--ann", fit.annotations, "Annotation JSON (default: synthetic shapes)");
  s_fit->add_option("--images-dir", fit.images_dir, "Images for --ann");
  s_fit->add_option("--cache", fit.cache, "PTC1 teacher cache for --ann");
  s_fit->add_option("--out", fit.out, "Trained PSW1 weights");
  s_fit->add_option("--count", fit.count, "Synthetic sample count");
  s_fit->add_option("--steps", fit.steps, "AdamW steps");
  s_fit->add_option("--lr", fit.lr, "Learning rate");
  s_fit->add_option("--seed", fit.seed, "Seed for data and init");

  MakeCacheOptions cache;
  auto* s_cache = app.add_subcommand("make-cache", "Write a PTC1 teacher cache");
  s_cache->add_option("--ann", cache.annotations, "Build records for these annotations");
  s_cache->add_option("--out", cache.out, "PTC1 output");
  s_cache->add_option("--count", cache.count, "Record count without --ann");
  s_cache->add_option("--seed", cache.seed, "Seed");

  SynthDataOptions synth_opt;
  auto* s_synth = app.add_subcommand("synth-data", "Generate a synthetic shapes dataset");
  s_synth->add_option("--out", synth_opt.out, "Output directory");
  s_synth->add_option("--count", synth_opt.count, "Number of images");
  s_synth->add_option("--width", synth_opt.width, "Image width");
  s_synth->add_option("--height", synth_opt.height, "Image height");
  s_synth->add_option("--seed", synth_opt.seed, "Seed");

  InitOptions init;
  auto* s_init = app.add_subcommand("init", "Write seeded He-uniform weights");
  s_init->add_option("--out", init.out, "PSW1 output");
  s_init->add_option("--seed", init.seed, "Seed");

  std::string listen = "127.0.0.1:8080";
  std::optional<path> ui_dir;
  std::int64_t rate_ms = 150;
  auto* s_serve = app.add_subcommand("serve", "Run the HTTP gateway");
  add_model(s_serve);
  s_serve->add_option("--listen", listen, "host:port");
  s_serve->add_option("--ui-dir", ui_dir, "Static UI bundle served at /");
  s_serve->add_option("--rate-limit-ms", rate_ms, "Minimum interval between prompts per session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << json{{"error", "usage"}, {"message", msg.str()}}.dump() << '\n';
    return 2;
  }

  try {
    if (s_infer->parsed()) {
      infer.model = model;
      emit(out, std::nullopt, cmd_infer(infer));
    } else if (s_eval->parsed()) {
      eval.model = model;
      emit(out, eval_report, cmd_eval(eval));
    } else if (s_quant->parsed()) {
      emit(out, std::nullopt, cmd_quantize(quant));
    } else if (s_count->parsed()) {
      emit(out, std::nullopt, cmd_count(count));
    } else if (s_fit->parsed()) {
      emit(out, std::nullopt, cmd_fit_head(fit));
    } else if (s_cache->parsed()) {
      emit(out, std::nullopt, cmd_make_cache(cache));
    } else if (s_synth->parsed()) {
      emit(out, std::nullopt, cmd_synth_data(synth_opt));
    } else if (s_init->parsed()) {
      emit(out, std::nullopt, cmd_init(init));
    } else if (s_serve->parsed()) {
      model.allow_init = true;
      auto seg = std::make_shared<const Segmenter>(load_segmenter(model));
      SegmentService service(seg, steady_clock_ms(), ServiceOptions{rate_ms});
      http::serve(service, http::parse_listen(listen), ui_dir);
    }
  } catch (const Error& e) {
    err << json{{"error", e.error_class()}, {"message", e.what()}}.dump() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace picoseg::cli
