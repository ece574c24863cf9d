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

// Acceptance checks for the nine headline criteria. Prints one PASS/FAIL
// line per criterion; exit status is non-zero if any selected check fails.
//
//   acceptance               run all
//   acceptance 3 5           run a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../support/conv_cases.hpp"
#include "../support/gateway_script.hpp"
#include "../support/loss_checks.hpp"
#include "../support/quant_harness.hpp"
#include "../support/roi_checks.hpp"
#include "picoseg/binary_io.hpp"
#include "picoseg/coco.hpp"
#include "picoseg/net.hpp"
#include "picoseg/quant.hpp"
#include "picoseg/synth.hpp"
#include "picoseg/trainer.hpp"

using namespace picoseg;

namespace {

// Pinned bars.
constexpr std::int64_t kParamsLo = 1'260'000, kParamsHi = 1'480'000;
constexpr std::int64_t kMacsLo = 293'000'000, kMacsHi = 397'000'000;
constexpr double kBudgetSeconds = 1.0;
constexpr double kCompressionMax = 0.30;
constexpr double kCompressionSeconds = 30.0;
constexpr int kConvCases = 50;
constexpr double kConvSeconds = 10.0;
constexpr double kIdentityTol = 1e-6;
constexpr double kFdTol = 1e-4;
constexpr double kClosedFormTol = 1e-6;
constexpr double kRoiTol = 1e-9;
constexpr int kRoiCases = 500;
constexpr double kAgreementMin = 0.95;
constexpr int kDivergenceInputs = 20;
constexpr int kTrainSamples = 32;
constexpr int kTrainSteps = 200;
constexpr double kTrainLr = 3e-4;
constexpr double kTrainRatioMax = 0.5;
constexpr std::size_t kSmoothWindow = 20;
constexpr double kTrainSeconds = 120.0;
constexpr std::int64_t kRateWindowMs = 150;

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

Verdict architecture_budget() {
  Timer t;
  const NetSpec spec;
  const std::int64_t params = param_count(build(spec, 42));
  const std::int64_t macs = count_macs(spec);
  const double secs = t.seconds();
  const bool ok = params >= kParamsLo && params <= kParamsHi && macs >= kMacsLo && macs <= kMacsHi &&
                  params == param_count(spec) && secs < kBudgetSeconds;
  return {ok, "params=" + std::to_string(params) + " in [1.26M,1.48M], macs=" + std::to_string(macs) +
                  " in [293M,397M], " + fmt(secs, 3) + "s < 1s"};
}

Verdict compression() {
  Timer t;
  const WeightStore w = build(NetSpec{}, 42);
  const CalibrationSet calib = synthetic_calibration(7, CalibrationSet::kDefaultBatches);
  const QuantizedModel q = quantize_model(w, calib);
  const auto dir = std::filesystem::temp_directory_path() / "picoseg_acceptance";
  std::filesystem::create_directories(dir);
  save_weights(w, dir / "model.psw");
  export_int8(q, dir / "model.psq");
  const double fp = static_cast<double>(std::filesystem::file_size(dir / "model.psw"));
  const double i8 = static_cast<double>(std::filesystem::file_size(dir / "model.psq"));
  const bool round_trip = serialize_int8(import_int8(dir / "model.psq")) == serialize_int8(q);
  std::filesystem::remove_all(dir);
  const double ratio = i8 / fp, secs = t.seconds();
  const bool ok = ratio <= kCompressionMax && round_trip && calib.batches.size() == 10 && secs < kCompressionSeconds;
  return {ok, "psq/psw=" + fmt(ratio, 4) + " <= 0.30 (" + fmt(i8 / 1e6, 4) + " MB / " + fmt(fp / 1e6, 4) +
                  " MB), round trip " + (round_trip ? "ok" : "BROKEN") + ", " + fmt(secs, 3) + "s < 30s"};
}

Verdict conv_oracle() {
  Timer t;
  int equal = 0;
  const auto cases = test::conv_sweep(2024, kConvCases);
  for (const auto& c : cases) equal += test::bit_equal(conv2d(c.input, c.params), conv2d_naive(c.input, c.params));
  const double secs = t.seconds();
  return {equal == kConvCases && secs < kConvSeconds,
          std::to_string(equal) + "/" + std::to_string(kConvCases) + " bit-exact, " + fmt(secs, 3) + "s < 10s"};
}

Verdict loss_correctness() {
  const double identity = test::breakdown_identity_error(31, 1000);
  const double fd = test::fd_sweep_worst(41, 20);

  const LossConfig cfg;
  auto filled = [](int n, float v) { return Tensor(Shape{1, 1, 1, n}, v); };
  std::vector<std::pair<double, double>> forms;  // (got, want)
  forms.push_back({sigmoid_tau(filled(1, 1), 5).data()[0], 1.0 / (1.0 + std::exp(-5.0))});
  forms.push_back({dice_loss(filled(16, 0.5f), filled(16, 0.5f), cfg.dice_eps), 0.5});
  forms.push_back({teacher_loss(filled(4, -10), filled(4, 10), cfg), 2.0});
  forms.push_back({gt_loss(filled(9, 0), filled(9, 0), cfg), std::log(2.0) + 1.0});
  forms.push_back({area_loss(filled(100, -50), filled(100, 1), cfg), 0.4});
  std::mt19937_64 rng(23);
  const auto li = test::random_loss_instance(rng, Shape{1, 1, 5, 5});
  const double t0 = total_loss(li.student, li.teacher, li.target, 0.0, cfg).l_total;
  const double t1 = total_loss(li.student, li.teacher, li.target, 1.0, cfg).l_total;
  forms.push_back({total_loss(li.student, li.teacher, li.target, 0.5, cfg).l_total, 0.5 * (t0 + t1)});
  double worst_form = 0.0;
  for (auto [got, want] : forms) worst_form = std::max(worst_form, std::abs(got - want));

  const bool ok = identity <= kIdentityTol && fd <= kFdTol && worst_form <= kClosedFormTol;
  return {ok, "identity max err " + fmt(identity, 3) + " <= 1e-6 (1000 cases), FD rel err " + fmt(fd, 3) +
                  " <= 1e-4 (20 cases), closed forms max err " + fmt(worst_form, 3) + " <= 1e-6"};
}

Verdict roi_geometry() {
  const Extent vga{640, 480};
  struct Example {
    BBox box;
    double pad;
    double x1, y1, x2, y2;
  };
  const Example ex[] = {{{100, 50, 40, 60}, 0.1, 84, 44, 156, 116},
                        {{0, 0, 10, 10}, 0.0, 0, 0, 10, 10},
                        {{620, 460, 40, 40}, 0.1, 616, 456, 640, 480}};
  double worst = 0.0;
  for (const auto& e : ex) {
    const CropRect r = make_square_roi(e.box, PromptConfig{e.pad, 96}, vga);
    for (auto [got, want] : {std::pair{r.x1, e.x1}, {r.y1, e.y1}, {r.x2, e.x2}, {r.y2, e.y2}}) {
      worst = std::max(worst, std::abs(got - want));
    }
  }
  const auto props = test::roi_properties(99, kRoiCases, kRoiTol);
  const int fails = props.square_failures + props.translation_failures + props.scale_failures;
  return {worst <= kRoiTol && fails == 0 && props.cases == kRoiCases,
          "examples max err " + fmt(worst, 3) + " <= 1e-9, property failures " + std::to_string(fails) + "/" +
              std::to_string(props.cases) + " boxes (square, translation, scale)"};
}

Verdict quantization_fidelity() {
  const WeightStore w = build(NetSpec{}, 42);
  const QuantizedModel q = quantize_model(w, test::noise_calibration(7, CalibrationSet::kDefaultBatches, 2));
  const double steps = test::worst_dequant_error_in_steps(w, q);
  const Divergence d = measure_divergence(w, q, test::noise_inputs(99, kDivergenceInputs));
  const bool ok = steps <= 0.5 + 1e-6 && d.sign_agreement >= kAgreementMin;
  return {ok, "weight dequant max err " + fmt(steps, 4) + " scale <= 0.5 scale, mask agreement " +
                  fmt(100 * d.sign_agreement, 4) + "% >= 95% on " + std::to_string(kDivergenceInputs) +
                  " inputs (mean |gap| " + fmt(d.mean_abs_logit_gap, 4) + ", max " + fmt(d.max_abs_logit_gap, 4) + ")"};
}

Verdict learning_sanity() {
  Timer t;
  const WeightStore w = build(NetSpec{}, 42);
  const auto data = synth::training_set(42, kTrainSamples);
  AdamWConfig cfg;
  cfg.lr = kTrainLr;
  const FitResult a = fit_head(w, data, kTrainSteps, cfg);
  const FitResult b = fit_head(w, data, kTrainSteps, cfg);
  const double secs = t.seconds();
  const double head = head_mean(a.loss_trace, kSmoothWindow), tail = tail_mean(a.loss_trace, kSmoothWindow);
  const double ratio = tail / head;
  const bool same = a.loss_trace == b.loss_trace;
  return {ratio <= kTrainRatioMax && same && secs < kTrainSeconds,
          "smoothed loss " + fmt(head, 5) + " -> " + fmt(tail, 5) + ", ratio " + fmt(ratio, 4) +
              " <= 0.5, trace " + (same ? "deterministic" : "NOT deterministic") + ", " + fmt(secs, 3) +
              "s for two runs < 120s"};
}

Verdict metrics_oracle() {
  auto strip = [](int total, int n) {
    Mask m(1, total);
    for (int i = 0; i < n; ++i) m.at(0, i) = 1;
    return m;
  };
  const std::vector<Mask> refs{strip(10, 10), strip(10, 10)}, preds{strip(10, 6), strip(10, 9)};
  const EvalReport r = evaluate(preds, refs);
  const bool eval_ok = r.miou == 0.75 && r.map == 0.6;

  const std::uint32_t counts[] = {1, 2, 1};
  const Mask rle = decode_rle(2, 2, counts);
  const bool rle_ok = rle.data == std::vector<std::uint8_t>{0, 1, 1, 0};

  // Reference rasters by enumerating pixel centres strictly inside.
  const Mask sq = rasterize_polygon(8, 8, {{0, 0, 4, 0, 4, 4, 0, 4}});
  const Mask tri = rasterize_polygon(8, 8, {{0, 0, 4, 0, 0, 4}});
  int sq_bad = 0, tri_bad = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      sq_bad += sq.at(y, x) != (cx < 4 && cy < 4 ? 1 : 0);
      tri_bad += tri.at(y, x) != (cx + cy < 4 ? 1 : 0);
    }
  }
  const bool raster_ok = sq.area() == 16 && sq_bad == 0 && tri_bad == 0;
  return {eval_ok && rle_ok && raster_ok,
          "miou=" + fmt(r.miou) + " map=" + fmt(r.map) + " (want 0.75, 0.6), rle [1,2,1] " +
              (rle_ok ? "exact" : "WRONG") + ", square " + std::to_string(sq.area()) + "/16 px, triangle " +
              std::to_string(tri.area()) + " px matching centre enumeration (" + std::to_string(tri_bad) +
              " mismatches)"};
}

Verdict gateway_contract() {
  auto seg = std::make_shared<const Segmenter>(Segmenter::fp32(build(NetSpec{}, 42)));
  test::FakeClock clock;
  SegmentService svc(seg, clock.fn(), ServiceOptions{kRateWindowMs});
  const Reply f = svc.post_frame("acc", test::ppm_body(96, 72));
  const auto frame = nlohmann::json::parse(f.body).at("frame_id").get<std::int64_t>();

  std::vector<std::int64_t> burst;
  for (int i = 0; i < 20; ++i) burst.push_back(1000 + 7 * i);
  const auto b = test::run_burst(svc, clock, "acc", frame, burst);
  bool retry_ok = b.retry_after.size() == 19;
  for (std::size_t i = 0; retry_ok && i < b.retry_after.size(); ++i) {
    retry_ok = b.retry_after[i] == kRateWindowMs - 7 * static_cast<std::int64_t>(i + 1);
  }
  const bool burst_ok = b.admitted_at.size() == 1 && b.rejected == 19 && retry_ok;

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> gap(0, 120);
  std::vector<std::int64_t> spread{5000};
  for (int i = 1; i < 20; ++i) spread.push_back(spread.back() + gap(rng));
  const auto s = test::run_burst(svc, clock, "acc", frame, spread);
  bool spaced = s.admitted_at == test::expected_admissions(spread, kRateWindowMs);
  for (std::size_t i = 1; i < s.admitted_at.size(); ++i) spaced &= s.admitted_at[i] - s.admitted_at[i - 1] >= kRateWindowMs;

  int identical = 0;
  nlohmann::json first;
  for (int i = 0; i < 3; ++i) {
    clock.set(100000 + 1000 * i);
    const Reply r = svc.post_segment("acc", test::segment_body(frame, 20, 16, 30, 24));
    if (r.status != 200) break;
    auto j = nlohmann::json::parse(r.body);
    j.erase("latency_ms");
    if (i == 0) first = j;
    identical += j == first;
  }
  return {burst_ok && spaced && identical == 3,
          "burst of 20 in 133 ms: " + std::to_string(b.admitted_at.size()) + " admitted, retry-after " +
              (retry_ok ? "exact" : "WRONG") + "; spread script: " + std::to_string(s.admitted_at.size()) +
              " admitted, first-wins " + (spaced ? "ok" : "VIOLATED") + "; idempotent repeats " +
              std::to_string(identical) + "/3"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"architecture budget", architecture_budget}, {"compression", compression},
      {"conv oracle equivalence", conv_oracle},     {"loss correctness", loss_correctness},
      {"ROI geometry", roi_geometry},               {"quantization fidelity", quantization_fidelity},
      {"learning sanity", learning_sanity},         {"metrics oracle", metrics_oracle},
      {"gateway contract", gateway_contract},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= 9; ++i) selected.push_back(i);

  int failed = 0;
  for (int id : selected) {
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(id - 1)];
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("[%d] %s %s: %s\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
