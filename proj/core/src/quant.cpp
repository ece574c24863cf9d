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

#include "picoseg/quant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "picoseg/binary_io.hpp"
#include "picoseg/error.hpp"
#include "picoseg/graph.hpp"
#include "picoseg/roi.hpp"
#include "picoseg/synth.hpp"

namespace picoseg {

namespace {

namespace ln = layer_names;

constexpr char kMagic[] = "PSQ1";
constexpr std::uint32_t kVersion = 1;

std::size_t numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

int channels_for(const std::string& name, const std::vector<int>& shape) {
  if (name.ends_with(".bias")) return static_cast<int>(numel(shape));
  if (shape.size() == 4) return shape[0];
  return 1;
}

std::int8_t saturate8(double v) {
  return static_cast<std::int8_t>(std::clamp(v, -128.0, 127.0));
}

// Records site names in execution order without computing anything.
struct SiteBackend {
  using Value = int;
  std::vector<std::string> sites;

  int input(int) {
    sites.emplace_back(ln::kInputSite);
    return 0;
  }
  int conv(const LayerSpec& l, int) {
    sites.push_back(l.name);
    return 0;
  }
  int upsample(int) { return 0; }
  int concat(const std::string& site, int, int) {
    sites.push_back(site);
    return 0;
  }
  int eca(const LayerSpec& l, int) {
    sites.emplace_back(ln::kEcaPoolSite);
    sites.push_back(l.name);
    return 0;
  }
  int head(const LayerSpec&, int) { return 0; }
};

ConvGeometry geometry(const LayerSpec& l) {
  return ConvGeometry{l.stride, l.padding, l.dilation, l.groups};
}

// Maps every int8 code under `from` to its nearest code under `to`.
std::array<std::int8_t, 256> requant_table(const ActivationParams& from, const ActivationParams& to) {
  std::array<std::int8_t, 256> t{};
  for (int q = -128; q <= 127; ++q) {
    t[static_cast<std::size_t>(q + 128)] =
        quantize_value(dequantize_value(static_cast<std::int8_t>(q), from), to);
  }
  return t;
}

struct IntBackend {
  using Value = QActivation;
  const QuantizedModel& model;

  QActivation input(QActivation x) { return x; }

  QActivation conv(const LayerSpec& l, const QActivation& x) {
    const QTensor& w = model.tensor(l.name + ".weight");
    const std::vector<float> b = dequantize(model.tensor(l.name + ".bias"));
    return quantized_conv2d(x, w, b, geometry(l), l.relu, model.site(l.name));
  }

  QActivation upsample(const QActivation& x) {
    const Shape& s = x.shape;
    QActivation y{Shape{s.n, s.c, s.h * 2, s.w * 2}, {}, x.params};
    y.codes.resize(y.shape.numel());
    for (int nc = 0; nc < s.n * s.c; ++nc) {
      const std::int8_t* src = x.codes.data() + static_cast<std::size_t>(nc) * s.plane();
      std::int8_t* dst = y.codes.data() + static_cast<std::size_t>(nc) * y.shape.plane();
      for (int oy = 0; oy < y.shape.h; ++oy) {
        for (int ox = 0; ox < y.shape.w; ++ox) {
          dst[static_cast<std::size_t>(oy) * y.shape.w + ox] =
              src[static_cast<std::size_t>(oy / 2) * s.w + ox / 2];
        }
      }
    }
    return y;
  }

  QActivation concat(const std::string& site, const QActivation& a, const QActivation& b) {
    if (a.shape.n != b.shape.n || a.shape.h != b.shape.h || a.shape.w != b.shape.w) {
      throw Error(ErrorCode::kShape, "int8 concat: " + a.shape.str() + " vs " + b.shape.str());
    }
    const ActivationParams& out = model.site(site);
    const auto ta = requant_table(a.params, out);
    const auto tb = requant_table(b.params, out);
    QActivation y{Shape{a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w}, {}, out};
    y.codes.reserve(y.shape.numel());
    const std::size_t pa = static_cast<std::size_t>(a.shape.c) * a.shape.plane();
    const std::size_t pb = static_cast<std::size_t>(b.shape.c) * b.shape.plane();
    for (int n = 0; n < a.shape.n; ++n) {
      for (std::size_t i = 0; i < pa; ++i) {
        y.codes.push_back(ta[static_cast<std::size_t>(a.codes[n * pa + i] + 128)]);
      }
      for (std::size_t i = 0; i < pb; ++i) {
        y.codes.push_back(tb[static_cast<std::size_t>(b.codes[n * pb + i] + 128)]);
      }
    }
    return y;
  }

  QActivation eca(const LayerSpec& l, const QActivation& x) {
    const QTensor& w = model.tensor(l.name + ".weight");
    const ActivationParams& pool_p = model.site(ln::kEcaPoolSite);
    const ActivationParams& out_p = model.site(l.name);
    const Shape& s = x.shape;
    const std::size_t plane = s.plane();
    const int k = static_cast<int>(w.codes.size());
    const int pad = (k - 1) / 2;

    QActivation y{s, std::vector<std::int8_t>(s.numel()), out_p};
    std::vector<std::int32_t> pooled(static_cast<std::size_t>(s.c));
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const std::int8_t* src = x.codes.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < plane; ++i) sum += src[i] - x.params.zero_point;
        const double mean = static_cast<double>(sum) / static_cast<double>(plane) * x.params.scale;
        pooled[c] = quantize_value(mean, pool_p) - pool_p.zero_point;
      }
      for (int c = 0; c < s.c; ++c) {
        std::int32_t acc = 0;
        for (int j = 0; j < k; ++j) {
          const int src = c + j - pad;
          if (src < 0 || src >= s.c) continue;
          acc += pooled[src] * w.codes[j];
        }
        const double z = static_cast<double>(acc) * pool_p.scale * w.scales[0];
        const double gate = 1.0 / (1.0 + std::exp(-z));
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          y.codes[base + i] = quantize_value(dequantize_value(x.codes[base + i], x.params) * gate, out_p);
        }
      }
    }
    return y;
  }

  QActivation head(const LayerSpec& l, const QActivation& x) {
    // The head leaves the int8 domain; carry the float logits through a
    // one-off activation so run_graph's Value type stays uniform.
    const QTensor& w = model.tensor(l.name + ".weight");
    const std::vector<float> b = dequantize(model.tensor(l.name + ".bias"));
    logits = quantized_conv2d_float(x, w, b, geometry(l));
    return x;
  }

  Tensor logits;
};

}  // namespace

int quant_channels(const Param& p) { return channels_for(p.name, p.shape); }

QTensor quantize_tensor(const Param& p, int channels) {
  const std::size_t n = p.values.size();
  if (channels < 1 || n % static_cast<std::size_t>(channels) != 0) {
    throw Error(ErrorCode::kShape, "quantize_tensor: '" + p.name + "' has " + std::to_string(n) +
                                       " values, not divisible into " + std::to_string(channels) +
                                       " channels");
  }
  QTensor q{p.name, p.shape, std::vector<float>(static_cast<std::size_t>(channels)),
            std::vector<std::int8_t>(n)};
  const std::size_t per = n / static_cast<std::size_t>(channels);
  for (int c = 0; c < channels; ++c) {
    const float* w = p.values.data() + c * per;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      if (!std::isfinite(w[i])) {
        throw Error(ErrorCode::kNonFinite, "quantize_tensor: '" + p.name + "' has a non-finite weight");
      }
      max_abs = std::max(max_abs, std::abs(static_cast<double>(w[i])));
    }
    const float scale = max_abs > 0.0 ? static_cast<float>(max_abs / 127.0) : 1.0f;
    q.scales[c] = scale;
    for (std::size_t i = 0; i < per; ++i) {
      const double r = std::round(static_cast<double>(w[i]) / scale);
      q.codes[c * per + i] = static_cast<std::int8_t>(std::clamp(r, -127.0, 127.0));
    }
  }
  return q;
}

std::vector<float> dequantize(const QTensor& q) {
  std::vector<float> out(q.codes.size());
  const std::size_t per = q.channel_size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.scales[i / per] * q.codes[i];
  return out;
}

ActivationParams activation_params(double min, double max) {
  if (!std::isfinite(min) || !std::isfinite(max) || min > max) {
    throw Error(ErrorCode::kInvalidArgument, "activation_params: invalid range");
  }
  if (max == min) return {1.0f, 0};
  const double lo = std::min(min, 0.0);
  const double hi = std::max(max, 0.0);
  const double scale = (hi - lo) / 255.0;
  const double zp = std::clamp(-128.0 + std::round(-lo / scale), -128.0, 127.0);
  return {static_cast<float>(scale), static_cast<std::int32_t>(zp)};
}

std::int8_t quantize_value(double x, const ActivationParams& p) {
  return saturate8(std::round(x / p.scale) + p.zero_point);
}

std::vector<std::string> activation_sites(const NetSpec& spec) {
  const NetPlan plan(spec);
  SiteBackend be;
  run_graph(plan, be, 0);
  return be.sites;
}

void CalibrationSet::validate(const NetSpec& spec) const {
  if (batches.empty()) throw Error(ErrorCode::kEmpty, "calibration set has no batches");
  for (const Tensor& b : batches) {
    const Shape& s = b.shape();
    if (s.c != 3 || s.h != spec.input_size || s.w != spec.input_size) {
      throw Error(ErrorCode::kShape, "calibration batch has shape " + s.str());
    }
  }
}

CalibrationSet synthetic_calibration(std::uint64_t seed, int batches, int batch_size) {
  if (batches < 1 || batch_size < 1) {
    throw Error(ErrorCode::kEmpty, "synthetic_calibration needs at least one batch and sample");
  }
  std::mt19937_64 rng(seed);
  CalibrationSet set;
  const PromptConfig prompt;
  for (int b = 0; b < batches; ++b) {
    Tensor batch(Shape{batch_size, 3, prompt.target_size, prompt.target_size});
    for (int i = 0; i < batch_size; ++i) {
      const synth::Scene scene = synth::make_scene(rng, 160, 120);
      const CropRect rect = make_square_roi(scene.objects.front().bbox, prompt, Extent{160, 120});
      Tensor crop = crop_resize_image(scene.image, rect, prompt.target_size);
      normalize_input(crop);
      std::copy(crop.data().begin(), crop.data().end(), batch.data().begin() + i * crop.size());
    }
    set.batches.push_back(std::move(batch));
  }
  return set;
}

void RangeObserver::observe(std::span<const float> values) {
  for (float v : values) {
    if (!seen) {
      min = max = v;
      seen = true;
    } else {
      min = std::min(min, static_cast<double>(v));
      max = std::max(max, static_cast<double>(v));
    }
  }
}

SiteTable calibrate(const WeightStore& weights, const CalibrationSet& calib) {
  calib.validate(weights.spec());
  std::map<std::string, RangeObserver, std::less<>> ranges;
  const ActivationObserver obs = [&](std::string_view site, const Tensor& t) {
    auto it = ranges.find(site);
    if (it == ranges.end()) it = ranges.emplace(std::string(site), RangeObserver{}).first;
    it->second.observe(t.data());
  };
  for (const Tensor& batch : calib.batches) forward(weights, batch, obs);

  SiteTable table;
  for (const std::string& site : activation_sites(weights.spec())) {
    auto it = ranges.find(site);
    if (it == ranges.end() || !it->second.seen) {
      throw Error(ErrorCode::kMissingSite, "calibration never observed site '" + site + "'");
    }
    table[site] = activation_params(it->second.min, it->second.max);
  }
  return table;
}

QuantizedModel::QuantizedModel(NetSpec spec, std::vector<QTensor> tensors, SiteTable sites)
    : spec_(std::move(spec)), tensors_(std::move(tensors)), sites_(std::move(sites)) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) index_[tensors_[i].name] = i;
}

const QTensor& QuantizedModel::tensor(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kMissingLayer, "quantized model has no tensor '" + std::string(name) + "'");
  }
  return tensors_[it->second];
}

const ActivationParams& QuantizedModel::site(std::string_view name) const {
  auto it = sites_.find(name);
  if (it == sites_.end()) {
    throw Error(ErrorCode::kMissingSite,
                "no activation parameters for site '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<QTensor> quantize_weights(const WeightStore& weights) {
  std::vector<QTensor> out;
  out.reserve(weights.params().size());
  for (const Param& p : weights.params()) out.push_back(quantize_tensor(p, quant_channels(p)));
  return out;
}

QuantizedModel quantize_model(const WeightStore& weights, const CalibrationSet& calib) {
  SiteTable sites = calibrate(weights, calib);
  return QuantizedModel(weights.spec(), quantize_weights(weights), std::move(sites));
}

WeightStore dequantized_weights(const QuantizedModel& model) {
  std::vector<Param> params;
  for (const QTensor& q : model.tensors()) params.push_back(Param{q.name, q.shape, dequantize(q)});
  return WeightStore(model.spec(), std::move(params));
}

QActivation quantize_activation(const Tensor& t, const ActivationParams& p) {
  QActivation a{t.shape(), std::vector<std::int8_t>(t.size()), p};
  const auto src = t.data();
  for (std::size_t i = 0; i < src.size(); ++i) a.codes[i] = quantize_value(src[i], p);
  return a;
}

Tensor dequantize_activation(const QActivation& a) {
  Tensor t(a.shape);
  auto dst = t.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(dequantize_value(a.codes[i], a.params));
  }
  return t;
}

std::vector<std::int32_t> quantize_bias(std::span<const float> bias, float input_scale,
                                        std::span<const float> weight_scales) {
  if (bias.size() != weight_scales.size()) {
    throw Error(ErrorCode::kShape, "quantize_bias: bias/scale length mismatch");
  }
  std::vector<std::int32_t> out(bias.size());
  constexpr double lo = std::numeric_limits<std::int32_t>::min();
  constexpr double hi = std::numeric_limits<std::int32_t>::max();
  for (std::size_t i = 0; i < bias.size(); ++i) {
    const double s = static_cast<double>(input_scale) * weight_scales[i];
    out[i] = static_cast<std::int32_t>(std::clamp(std::round(bias[i] / s), lo, hi));
  }
  return out;
}

std::vector<std::int32_t> quantized_conv_accumulate(const QActivation& x, const QTensor& weight,
                                                    std::span<const std::int32_t> bias,
                                                    const ConvGeometry& g, Shape& out_shape) {
  const Shape& s = x.shape;
  if (weight.shape.size() != 4) {
    throw Error(ErrorCode::kShape, "quantized conv: '" + weight.name + "' kernel is not rank 4");
  }
  const int oc_total = weight.shape[0], ic_per = weight.shape[1];
  const int kh = weight.shape[2], kw = weight.shape[3];
  if (g.groups < 1 || s.c % g.groups != 0 || oc_total % g.groups != 0 || s.c / g.groups != ic_per) {
    throw Error(ErrorCode::kShape, "quantized conv: '" + weight.name + "' expects " +
                                       std::to_string(ic_per * g.groups) + " input channels, got " +
                                       std::to_string(s.c));
  }
  if (weight.scales.size() != static_cast<std::size_t>(oc_total) ||
      bias.size() != static_cast<std::size_t>(oc_total)) {
    throw Error(ErrorCode::kShape, "quantized conv: '" + weight.name + "' needs one scale and bias per output channel");
  }
  const int oh = conv_output_extent(s.h, kh, g.stride, g.padding, g.dilation);
  const int ow = conv_output_extent(s.w, kw, g.stride, g.padding, g.dilation);
  if (oh < 1 || ow < 1) throw Error(ErrorCode::kShape, "quantized conv: empty output");
  out_shape = Shape{s.n, oc_total, oh, ow};

  std::vector<std::int32_t> centred(x.codes.size());
  for (std::size_t i = 0; i < centred.size(); ++i) centred[i] = x.codes[i] - x.params.zero_point;

  std::vector<std::int32_t> acc(out_shape.numel());
  const int oc_per = oc_total / g.groups;
  const std::size_t in_plane = s.plane();
  const std::size_t out_plane = out_shape.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int oc = 0; oc < oc_total; ++oc) {
      std::int32_t* dst = acc.data() + (static_cast<std::size_t>(n) * oc_total + oc) * out_plane;
      std::fill(dst, dst + out_plane, bias[oc]);
      const int group = oc / oc_per;
      for (int ci = 0; ci < ic_per; ++ci) {
        const std::int32_t* src =
            centred.data() + (static_cast<std::size_t>(n) * s.c + group * ic_per + ci) * in_plane;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const std::int32_t wv =
                weight.codes[((static_cast<std::size_t>(oc) * ic_per + ci) * kh + ky) * kw + kx];
            if (wv == 0) continue;
            const int x_off = kx * g.dilation - g.padding;
            const int ox_lo = x_off >= 0 ? 0 : (-x_off + g.stride - 1) / g.stride;
            const int last = s.w - 1 - x_off;
            const int ox_hi = last < 0 ? 0 : std::min(ow, last / g.stride + 1);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * g.stride - g.padding + ky * g.dilation;
              if (iy < 0 || iy >= s.h) continue;
              const std::int32_t* row = src + static_cast<std::size_t>(iy) * s.w;
              std::int32_t* out_row = dst + static_cast<std::size_t>(oy) * ow;
              for (int ox = ox_lo; ox < ox_hi; ++ox) out_row[ox] += wv * row[ox * g.stride + x_off];
            }
          }
        }
      }
    }
  }
  return acc;
}

QActivation quantized_conv2d(const QActivation& x, const QTensor& weight, std::span<const float> bias,
                             const ConvGeometry& geom, bool relu, const ActivationParams& out) {
  const std::vector<std::int32_t> b = quantize_bias(bias, x.params.scale, weight.scales);
  Shape os;
  const std::vector<std::int32_t> acc = quantized_conv_accumulate(x, weight, b, geom, os);
  QActivation y{os, std::vector<std::int8_t>(acc.size()), out};
  const std::size_t plane = os.plane();
  for (int n = 0; n < os.n; ++n) {
    for (int oc = 0; oc < os.c; ++oc) {
      const double m = static_cast<double>(x.params.scale) * weight.scales[oc] / out.scale;
      const std::size_t base = (static_cast<std::size_t>(n) * os.c + oc) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        std::int32_t a = acc[base + i];
        if (relu) a = std::max(a, 0);
        y.codes[base + i] = saturate8(std::round(a * m) + out.zero_point);
      }
    }
  }
  return y;
}

Tensor quantized_conv2d_float(const QActivation& x, const QTensor& weight, std::span<const float> bias,
                              const ConvGeometry& geom) {
  const std::vector<std::int32_t> b = quantize_bias(bias, x.params.scale, weight.scales);
  Shape os;
  const std::vector<std::int32_t> acc = quantized_conv_accumulate(x, weight, b, geom, os);
  Tensor y(os);
  auto dst = y.data();
  const std::size_t plane = os.plane();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const int oc = static_cast<int>((i / plane) % static_cast<std::size_t>(os.c));
    dst[i] = static_cast<float>(acc[i] * (static_cast<double>(x.params.scale) * weight.scales[oc]));
  }
  return y;
}

Tensor quantized_forward(const QuantizedModel& model, const Tensor& input) {
  const NetPlan plan(model.spec());
  const Shape& s = input.shape();
  const int size = plan.spec().input_size;
  if (s.c != 3 || s.h != size || s.w != size) {
    throw Error(ErrorCode::kShape, "quantized_forward expects (N,3," + std::to_string(size) + "," +
                                       std::to_string(size) + ") input, got " + s.str());
  }
  IntBackend be{model, {}};
  run_graph(plan, be, quantize_activation(input, model.site(ln::kInputSite)));
  return std::move(be.logits);
}

std::vector<std::uint8_t> serialize_int8(const QuantizedModel& model) {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u64(model.spec().fingerprint());
  w.u32(static_cast<std::uint32_t>(model.sites().size()));
  for (const auto& [name, p] : model.sites()) {
    w.name(name);
    w.f32(p.scale);
    w.i32(p.zero_point);
  }
  w.u32(static_cast<std::uint32_t>(model.tensors().size()));
  for (const QTensor& q : model.tensors()) {
    w.name(q.name);
    w.u32(static_cast<std::uint32_t>(q.scales.size()));
    w.f32s(q.scales);
    w.i8s(q.codes);
  }
  return w.bytes();
}

QuantizedModel deserialize_int8(std::span<const std::uint8_t> bytes, const NetSpec& expected) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not a PSQ1 quantized model");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kFormat, "unsupported PSQ1 version " + std::to_string(version));
  }
  if (r.u64() != expected.fingerprint()) {
    throw Error(ErrorCode::kFingerprint, "quantized model was built for a different network spec");
  }
  SiteTable sites;
  const std::uint32_t site_count = r.u32();
  for (std::uint32_t i = 0; i < site_count; ++i) {
    std::string name = r.name();
    ActivationParams p;
    p.scale = r.f32();
    p.zero_point = r.i32();
    if (!(p.scale > 0.0f) || !std::isfinite(p.scale) || p.zero_point < -128 || p.zero_point > 127) {
      throw Error(ErrorCode::kFormat, "site '" + name + "' has invalid quantization parameters");
    }
    sites[std::move(name)] = p;
  }
  for (const std::string& site : activation_sites(expected)) {
    if (!sites.contains(site)) {
      throw Error(ErrorCode::kMissingSite, "quantized model lacks site '" + site + "'");
    }
  }

  const auto shapes = NetPlan(expected).parameter_shapes();
  const std::uint32_t count = r.u32();
  if (count != shapes.size()) {
    throw Error(ErrorCode::kShape, "quantized model has " + std::to_string(count) +
                                       " tensors, spec expects " + std::to_string(shapes.size()));
  }
  std::vector<QTensor> tensors;
  tensors.reserve(count);
  for (const auto& [want_name, shape] : shapes) {
    QTensor q;
    q.name = r.name();
    if (q.name != want_name) {
      throw Error(ErrorCode::kMissingLayer, "expected tensor '" + want_name + "', found '" + q.name + "'");
    }
    q.shape = shape;
    const std::uint32_t channels = r.u32();
    if (channels != static_cast<std::uint32_t>(channels_for(q.name, shape))) {
      throw Error(ErrorCode::kShape, "tensor '" + q.name + "' has an unexpected channel count");
    }
    q.scales.resize(channels);
    r.f32s(q.scales);
    for (float s : q.scales) {
      if (!(s > 0.0f) || !std::isfinite(s)) {
        throw Error(ErrorCode::kFormat, "tensor '" + q.name + "' has a non-positive scale");
      }
    }
    q.codes.resize(numel(shape));
    r.i8s(q.codes);
    tensors.push_back(std::move(q));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, std::to_string(r.remaining()) + " trailing bytes in quantized model");
  }
  return QuantizedModel(expected, std::move(tensors), std::move(sites));
}

void export_int8(const QuantizedModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_int8(model));
}

QuantizedModel import_int8(const std::filesystem::path& path, const NetSpec& expected) {
  return deserialize_int8(read_file(path), expected);
}

std::int64_t psq1_size(const NetSpec& spec) {
  std::int64_t total = 4 + 4 + 8 + 4;
  for (const std::string& site : activation_sites(spec)) {
    total += 2 + static_cast<std::int64_t>(site.size()) + 4 + 4;
  }
  total += 4;
  for (const auto& [name, shape] : NetPlan(spec).parameter_shapes()) {
    total += 2 + static_cast<std::int64_t>(name.size()) + 4 + 4 * channels_for(name, shape) +
             static_cast<std::int64_t>(numel(shape));
  }
  return total;
}

Divergence measure_divergence(const WeightStore& weights, const QuantizedModel& model,
                              std::span<const Tensor> inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kEmpty, "measure_divergence: no inputs");
  Divergence d;
  double gap_sum = 0.0;
  std::size_t agree = 0, total = 0;
  for (const Tensor& x : inputs) {
    const Tensor fp = forward(weights, x);
    const Tensor q = quantized_forward(model, x);
    for (std::size_t i = 0; i < fp.size(); ++i) {
      const double gap = std::abs(static_cast<double>(fp.data()[i]) - q.data()[i]);
      gap_sum += gap;
      d.max_abs_logit_gap = std::max(d.max_abs_logit_gap, gap);
      agree += (fp.data()[i] > 0.0f) == (q.data()[i] > 0.0f);
    }
    total += fp.size();
  }
  d.mean_abs_logit_gap = gap_sum / static_cast<double>(total);
  d.sign_agreement = static_cast<double>(agree) / static_cast<double>(total);
  return d;
}

}  // namespace picoseg
