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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picoseg/net.hpp"
#include "picoseg/tensor.hpp"

namespace picoseg {

/// Symmetric per-channel int8 tensor. Channel i covers the contiguous slice
/// [i * numel / C, (i + 1) * numel / C) of `codes`.
struct QTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> scales;
  std::vector<std::int8_t> codes;

  std::size_t channel_size() const { return codes.size() / scales.size(); }
  bool operator==(const QTensor&) const = default;
};

/// Number of quantization channels: dim 0 for conv kernels, one per element
/// for biases, one for the ECA kernel.
int quant_channels(const Param& p);

/// scale_c = max|w_c| / 127 (1 for an all-zero channel);
/// q = clamp(round_half_away(w / scale_c), -127, 127).
QTensor quantize_tensor(const Param& p, int channels);
std::vector<float> dequantize(const QTensor& q);

/// Affine per-tensor activation quantization, codes in [-128, 127].
struct ActivationParams {
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  bool operator==(const ActivationParams&) const = default;
};

/// Degenerate (max == min) ranges map to {1, 0}. Otherwise the range is
/// widened to contain 0, scale = (max - min) / 255 and
/// zero_point = clamp(-128 + round(-min / scale), -128, 127).
ActivationParams activation_params(double min, double max);

std::int8_t quantize_value(double x, const ActivationParams& p);
inline double dequantize_value(std::int8_t q, const ActivationParams& p) {
  return (static_cast<double>(q) - p.zero_point) * p.scale;
}

/// Recorded activation site names for a spec, in execution order.
std::vector<std::string> activation_sites(const NetSpec& spec);

struct CalibrationSet {
  static constexpr int kDefaultBatches = 10;

  std::vector<Tensor> batches;  // each (N, 3, S, S)

  /// Throws kEmpty for no batches, kShape for a mismatching batch.
  void validate(const NetSpec& spec) const;
};

/// `batches` batches of `batch_size` synthetic shape crops.
CalibrationSet synthetic_calibration(std::uint64_t seed, int batches = CalibrationSet::kDefaultBatches,
                                     int batch_size = 2);

/// Running min/max of one activation site.
struct RangeObserver {
  double min = 0.0;
  double max = 0.0;
  bool seen = false;

  void observe(std::span<const float> values);
};

using SiteTable = std::map<std::string, ActivationParams, std::less<>>;

/// Runs float forwards over the calibration set and converts the observed
/// ranges of every activation site into ActivationParams.
SiteTable calibrate(const WeightStore& weights, const CalibrationSet& calib);

/// Quantized network: int8 weights plus activation parameters.
class QuantizedModel {
 public:
  QuantizedModel(NetSpec spec, std::vector<QTensor> tensors, SiteTable sites);

  const NetSpec& spec() const { return spec_; }
  const std::vector<QTensor>& tensors() const { return tensors_; }
  const SiteTable& sites() const { return sites_; }

  /// kMissingLayer / kMissingSite when absent.
  const QTensor& tensor(std::string_view name) const;
  const ActivationParams& site(std::string_view name) const;

  bool operator==(const QuantizedModel& other) const {
    return spec_.canonical() == other.spec_.canonical() && tensors_ == other.tensors_ &&
           sites_ == other.sites_;
  }

 private:
  NetSpec spec_;
  std::vector<QTensor> tensors_;
  std::map<std::string, std::size_t, std::less<>> index_;
  SiteTable sites_;
};

/// Per-channel quantization of every parameter tensor.
std::vector<QTensor> quantize_weights(const WeightStore& weights);

/// calibrate() followed by quantize_weights().
QuantizedModel quantize_model(const WeightStore& weights, const CalibrationSet& calib);

/// Float store holding the dequantized weights.
WeightStore dequantized_weights(const QuantizedModel& model);

/// Int8 activation tensor.
struct QActivation {
  Shape shape;
  std::vector<std::int8_t> codes;
  ActivationParams params;
};

QActivation quantize_activation(const Tensor& t, const ActivationParams& p);
Tensor dequantize_activation(const QActivation& a);

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
};

/// Integer convolution: acc = bias_i32 + sum (q_x - zp_x) * q_w in int32.
/// Padding taps contribute nothing (they sit at the zero point).
std::vector<std::int32_t> quantized_conv_accumulate(const QActivation& x, const QTensor& weight,
                                                    std::span<const std::int32_t> bias,
                                                    const ConvGeometry& geom, Shape& out_shape);

/// bias_i32[c] = round(bias[c] / (s_x * s_w[c])), saturated to int32.
std::vector<std::int32_t> quantize_bias(std::span<const float> bias, float input_scale,
                                        std::span<const float> weight_scales);

/// Conv + optional ReLU requantized to `out`.
QActivation quantized_conv2d(const QActivation& x, const QTensor& weight,
                             std::span<const float> bias, const ConvGeometry& geom, bool relu,
                             const ActivationParams& out);

/// Conv dequantized straight to float (used for the logit head).
Tensor quantized_conv2d_float(const QActivation& x, const QTensor& weight,
                              std::span<const float> bias, const ConvGeometry& geom);

/// Int8 forward pass. Input (N, 3, S, S) float -> float logits (N, 1, S, S).
Tensor quantized_forward(const QuantizedModel& model, const Tensor& input);

// PSQ1 files.
std::vector<std::uint8_t> serialize_int8(const QuantizedModel& model);
QuantizedModel deserialize_int8(std::span<const std::uint8_t> bytes,
                                const NetSpec& expected = NetSpec{});
void export_int8(const QuantizedModel& model, const std::filesystem::path& path);
QuantizedModel import_int8(const std::filesystem::path& path, const NetSpec& expected = NetSpec{});
/// Exact PSQ1 byte size for a spec.
std::int64_t psq1_size(const NetSpec& spec);

/// FP vs INT8 comparison over a set of inputs.
struct Divergence {
  double mean_abs_logit_gap = 0.0;
  double max_abs_logit_gap = 0.0;
  double sign_agreement = 0.0;  // fraction of pixels where (fp > 0) == (int8 > 0)
};

Divergence measure_divergence(const WeightStore& weights, const QuantizedModel& model,
                              std::span<const Tensor> inputs);

}  // namespace picoseg
