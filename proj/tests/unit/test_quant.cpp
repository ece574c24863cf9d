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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/quant_harness.hpp"
#include "../support/test_support.hpp"
#include "picoseg/binary_io.hpp"
#include "picoseg/quant.hpp"

using namespace picoseg;
using picoseg::test::error_of;

namespace {

// Shared small-calibration model; building it costs a few forwards.
const WeightStore& weights() {
  static const WeightStore w = build(NetSpec{}, 42);
  return w;
}

const QuantizedModel& model() {
  static const QuantizedModel m = quantize_model(weights(), test::noise_calibration(3, 2, 1));
  return m;
}

}  // namespace

TEST_CASE("weight quantization worked examples") {
  const Param p{"k", {1, 3, 1, 1}, {-1.27f, 0.0f, 1.27f}};
  const QTensor q = quantize_tensor(p, 1);
  REQUIRE(q.scales.size() == 1);
  CHECK(q.scales[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(q.codes == std::vector<std::int8_t>{-127, 0, 127});

  const Param z{"z", {2, 2, 1, 1}, {0, 0, 0.5f, -0.25f}};
  const QTensor qz = quantize_tensor(z, 2);
  CHECK(qz.scales[0] == 1.0f);
  CHECK(qz.codes[0] == 0);
  CHECK(qz.codes[1] == 0);
  CHECK(dequantize(qz)[0] == 0.0f);
  // -0.25 / (0.5 / 127) = -63.5 rounds away from zero.
  CHECK(qz.codes[2] == 127);
  CHECK(qz.codes[3] == -64);
}

TEST_CASE("per-channel rounding error stays within half a step") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> mag(0.01f, 3.0f);
  Param p{"w", {100, 4, 3, 3}, {}};
  p.values.resize(100 * 36);
  for (int c = 0; c < 100; ++c) {
    const float m = mag(rng);
    std::uniform_real_distribution<float> u(-m, m);
    for (int i = 0; i < 36; ++i) p.values[c * 36 + i] = u(rng);
  }
  const QTensor q = quantize_tensor(p, quant_channels(p));
  REQUIRE(q.scales.size() == 100);
  const std::vector<float> back = dequantize(q);
  for (std::size_t i = 0; i < back.size(); ++i) {
    const float s = q.scales[i / 36];
    CHECK(std::abs(p.values[i] - back[i]) <= s / 2 * (1 + 1e-5f));
  }

  Param neg = p;
  for (float& v : neg.values) v = -v;
  const QTensor qn = quantize_tensor(neg, 100);
  CHECK(qn.scales == q.scales);
  for (std::size_t i = 0; i < q.codes.size(); ++i) CHECK(qn.codes[i] == -q.codes[i]);

  Param bad = p;
  bad.values[5] = NAN;
  CHECK(error_of([&] { quantize_tensor(bad, 100); }) == ErrorCode::kNonFinite);
}

TEST_CASE("channel rules") {
  CHECK(quant_channels(Param{"a.weight", {8, 1, 3, 3}, std::vector<float>(72)}) == 8);
  CHECK(quant_channels(Param{"a.bias", {8}, std::vector<float>(8)}) == 8);
  CHECK(quant_channels(Param{"eca.weight", {3}, std::vector<float>(3)}) == 1);
}

TEST_CASE("activation parameters") {
  const ActivationParams p = activation_params(0.0, 2.55);
  CHECK(p.scale == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(p.zero_point == -128);
  CHECK(quantize_value(0.0, p) == -128);
  CHECK(quantize_value(2.55, p) == 127);
  CHECK(quantize_value(99.0, p) == 127);
  CHECK(activation_params(1.5, 1.5) == ActivationParams{1.0f, 0});
  const ActivationParams sym = activation_params(-1.0, 1.0);
  CHECK(dequantize_value(quantize_value(0.0, sym), sym) == doctest::Approx(0.0).epsilon(1e-9));
  // Ranges are widened to contain zero.
  const ActivationParams pos = activation_params(1.0, 2.55);
  CHECK(pos == p);
}

TEST_CASE("toy 1x1 conv matches float within half an output step") {
  const ActivationParams in = activation_params(0.0, 2.55);
  Tensor x(Shape{1, 2, 3, 3});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.0f, 2.55f);
  for (float& v : x.data()) v = u(rng);
  const QActivation qx = quantize_activation(x, in);
  const Tensor xd = dequantize_activation(qx);

  const Param w{"toy.weight", {1, 2, 1, 1}, {0.5f, -0.25f}};
  const QTensor qw = quantize_tensor(w, 1);
  const std::vector<float> wd = dequantize(qw);
  const std::vector<float> bias{0.1f};

  ConvParams fp;
  fp.kernel = Tensor(Shape{1, 2, 1, 1}, std::vector<float>(wd.begin(), wd.end()));
  fp.bias = bias;
  const Tensor ref = conv2d(xd, fp);
  const auto [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
  const ActivationParams out = activation_params(*lo, *hi);

  const QActivation qy = quantized_conv2d(qx, qw, bias, ConvGeometry{}, false, out);
  const Tensor y = dequantize_activation(qy);
  REQUIRE(y.shape() == ref.shape());
  // The int32 bias adds at most half an accumulator step on top.
  const double acc_step = in.scale * qw.scales[0];
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(y.data()[i] - ref.data()[i]) <= out.scale / 2 + acc_step / 2 + 1e-6);
  }

  const Tensor yf = quantized_conv2d_float(qx, qw, bias, ConvGeometry{});
  for (std::size_t i = 0; i < yf.size(); ++i) CHECK(std::abs(yf.data()[i] - ref.data()[i]) <= acc_step / 2 + 1e-6);
}

TEST_CASE("integer accumulators are deterministic") {
  std::mt19937_64 rng(21);
  const Tensor x = test::random_tensor(Shape{1, 4, 7, 7}, rng);
  const QActivation qx = quantize_activation(x, activation_params(-1, 1));
  const Param w{"dw.weight", {4, 1, 3, 3}, test::random_tensor(Shape{4, 1, 3, 3}, rng).values()};
  const QTensor qw = quantize_tensor(w, 4);
  const std::vector<std::int32_t> b = quantize_bias(std::vector<float>{0.1f, 0, -0.2f, 0.3f}, qx.params.scale, qw.scales);
  const ConvGeometry g{1, 2, 2, 4};
  Shape s1, s2;
  const auto a1 = quantized_conv_accumulate(qx, qw, b, g, s1);
  const auto a2 = quantized_conv_accumulate(qx, qw, b, g, s2);
  CHECK(a1 == a2);
  CHECK(s1 == Shape{1, 4, 7, 7});
}

TEST_CASE("quantized model: dequant bound, sites and zero input") {
  CHECK(test::worst_dequant_error_in_steps(weights(), model()) <= 0.5 + 1e-6);
  const auto sites = activation_sites(NetSpec{});
  CHECK(sites.front() == "input");
  for (const auto& s : sites) CHECK(model().sites().count(s) == 1);

  const Tensor zero(Shape{1, 3, 96, 96});
  const Tensor y = quantized_forward(model(), zero);
  CHECK(y.shape() == Shape{1, 1, 96, 96});
  CHECK(y.all_finite());
  CHECK(quantized_forward(model(), zero) == y);

  SiteTable partial = model().sites();
  partial.erase(sites.back());
  const QuantizedModel broken(NetSpec{}, model().tensors(), partial);
  CHECK(error_of([&] { quantized_forward(broken, zero); }) == ErrorCode::kMissingSite);
}

TEST_CASE("calibration is deterministic and rejects empty sets") {
  const CalibrationSet c = test::noise_calibration(5, 1, 1);
  CHECK(calibrate(weights(), c) == calibrate(weights(), c));
  CHECK(error_of([&] { calibrate(weights(), CalibrationSet{}); }) == ErrorCode::kEmpty);
  CalibrationSet wrong;
  wrong.batches.push_back(Tensor(Shape{1, 3, 32, 32}));
  CHECK(error_of([&] { wrong.validate(NetSpec{}); }) == ErrorCode::kShape);
  CHECK(CalibrationSet::kDefaultBatches == 10);
  const CalibrationSet syn = synthetic_calibration(1);
  CHECK(syn.batches.size() == 10);
}

TEST_CASE("divergence shrinks as the calibration set grows") {
  const std::vector<Tensor> probe = synthetic_calibration(1234, 20, 1).batches;
  double prev = INFINITY;
  for (int batches : {1, 3, 10}) {
    const QuantizedModel m = quantize_model(weights(), synthetic_calibration(7, batches));
    const Divergence d = measure_divergence(weights(), m, probe);
    MESSAGE("batches " << batches << ": mean gap " << d.mean_abs_logit_gap << ", agreement " << d.sign_agreement);
    CHECK(d.mean_abs_logit_gap <= prev);
    prev = d.mean_abs_logit_gap;
  }
}

TEST_CASE("PSQ1 round trip and failure modes") {
  const auto dir = test::scratch_dir("psq1");
  export_int8(model(), dir / "m.psq");
  const QuantizedModel back = import_int8(dir / "m.psq");
  CHECK(back.tensors() == model().tensors());
  CHECK(back.sites() == model().sites());
  const std::vector<std::uint8_t> bytes = serialize_int8(model());
  CHECK(serialize_int8(back) == bytes);
  CHECK(static_cast<std::int64_t>(bytes.size()) == psq1_size(NetSpec{}));
  CHECK(static_cast<double>(bytes.size()) <= 0.30 * static_cast<double>(psw1_size(NetSpec{})));

  std::vector<std::uint8_t> magic = bytes;
  magic[1] = 'Z';
  CHECK(error_of([&] { deserialize_int8(magic); }) == ErrorCode::kBadMagic);
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 3);
  CHECK(error_of([&] { deserialize_int8(cut); }) == ErrorCode::kTruncated);
  NetSpec other;
  other.eca_kernel = 5;
  CHECK(error_of([&] { deserialize_int8(bytes, other); }) == ErrorCode::kFingerprint);
  std::vector<std::uint8_t> extra = bytes;
  extra.push_back(1);
  CHECK(error_of([&] { deserialize_int8(extra); }) == ErrorCode::kFormat);
}

TEST_CASE("dequantized weights stay close to the originals") {
  const WeightStore d = dequantized_weights(model());
  const Param& a = weights().get("enc1.down.weight");
  const Param& b = d.get("enc1.down.weight");
  const QTensor& q = model().tensor("enc1.down.weight");
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(std::abs(a.values[i] - b.values[i]) <= q.scales[i / q.channel_size()] / 2 * (1 + 1e-5f));
  }
}
