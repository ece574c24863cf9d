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

#include "picoseg/net.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "picoseg/binary_io.hpp"
#include "picoseg/error.hpp"
#include "picoseg/graph.hpp"

namespace picoseg {

namespace {

namespace ln = layer_names;

constexpr char kPswMagic[] = "PSW1";
constexpr std::uint32_t kPswVersion = 1;

[[noreturn]] void invalid_spec(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "invalid NetSpec: " + what);
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

LayerSpec conv_layer(std::string name, int in, int out, int k, int stride, int pad, int dil,
                     int groups, bool relu, int out_size) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kConv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  l.stride = stride;
  l.padding = pad;
  l.dilation = dil;
  l.groups = groups;
  l.relu = relu;
  l.out_size = out_size;
  return l;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::size_t numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

// Float backend for run_graph().
struct FloatBackend {
  using Value = Tensor;

  const WeightStore& weights;
  const ActivationObserver* observer = nullptr;
  bool stop_before_head = false;

  void observe(std::string_view site, const Tensor& t) const {
    if (observer && *observer) (*observer)(site, t);
  }

  Tensor input(Tensor x) {
    observe(ln::kInputSite, x);
    return x;
  }

  Tensor conv(const LayerSpec& layer, const Tensor& x) {
    Tensor y = conv2d(x, conv_params(weights, layer));
    if (layer.relu) relu_inplace(y);
    observe(layer.name, y);
    return y;
  }

  Tensor upsample(const Tensor& x) { return upsample_nearest2x(x); }

  Tensor concat(const std::string& site, const Tensor& a, const Tensor& b) {
    Tensor y = concat_channels(a, b);
    observe(site, y);
    return y;
  }

  Tensor eca(const LayerSpec& layer, const Tensor& x) {
    observe(ln::kEcaPoolSite, global_avg_pool(x));
    Tensor y = eca_block(x, weights.get(layer.name + ".weight").values);
    observe(layer.name, y);
    return y;
  }

  Tensor head(const LayerSpec& layer, const Tensor& x) {
    if (stop_before_head) return x;
    return conv2d(x, conv_params(weights, layer));
  }
};

void check_input(const NetSpec& spec, const Tensor& input) {
  const Shape& s = input.shape();
  if (s.c != 3 || s.h != spec.input_size || s.w != spec.input_size) {
    throw Error(ErrorCode::kShape, "forward expects (N,3," + std::to_string(spec.input_size) + "," +
                                       std::to_string(spec.input_size) + ") input, got " + s.str());
  }
}

}  // namespace

void NetSpec::validate() const {
  if (encoder_channels.empty()) invalid_spec("encoder channel schedule is empty");
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
    if (encoder_channels[i] < 1) invalid_spec("encoder channels must be positive");
    if (i > 0 && encoder_channels[i] <= encoder_channels[i - 1]) {
      invalid_spec("encoder channel schedule must be strictly increasing");
    }
  }
  const std::size_t stages = encoder_channels.size();
  if (encoder_blocks.size() != stages) invalid_spec("encoder_blocks must match the stage count");
  for (int b : encoder_blocks) {
    if (b < 0) invalid_spec("encoder block counts must be >= 0");
  }
  if (decoder_channels.size() != stages + 1 || decoder_blocks.size() != stages + 1) {
    invalid_spec("decoder needs one level per encoder stage plus a full-resolution level");
  }
  for (std::size_t i = 0; i < decoder_channels.size(); ++i) {
    if (decoder_channels[i] < 1) invalid_spec("decoder channels must be positive");
    if (decoder_blocks[i] < 1) invalid_spec("decoder levels need at least one block");
  }
  if (bottleneck_channels < 1) invalid_spec("bottleneck channels must be positive");
  if (bottleneck_dilation < 1) invalid_spec("bottleneck dilation must be >= 1");
  if (bottleneck_blocks < 1) invalid_spec("bottleneck needs at least one block");
  if (eca_kernel < 1 || eca_kernel % 2 == 0) invalid_spec("ECA kernel size must be odd");
  if (eca_kernel > decoder_channels.back()) invalid_spec("ECA kernel larger than channel count");
  const int factor = 1 << stages;
  if (input_size < factor || input_size % factor != 0) {
    invalid_spec("input size " + std::to_string(input_size) + " must be a multiple of " +
                 std::to_string(factor));
  }
  if (downsample != "conv3x3-s2") invalid_spec("unknown downsample style '" + downsample + "'");
}

std::string NetSpec::canonical() const {
  std::ostringstream os;
  os << "S=" << input_size << ";enc=" << join(encoder_channels) << ";eb=" << join(encoder_blocks)
     << ";bott=" << bottleneck_channels << ";dil=" << bottleneck_dilation
     << ";bb=" << bottleneck_blocks << ";dec=" << join(decoder_channels)
     << ";db=" << join(decoder_blocks) << ";eca=" << (eca_enabled ? eca_kernel : 0)
     << ";down=" << downsample;
  return os.str();
}

std::uint64_t NetSpec::fingerprint() const { return fnv1a64(canonical()); }

NetPlan::NetPlan(const NetSpec& spec) : spec_(spec) {
  spec_.validate();
  const int stages = static_cast<int>(spec_.encoder_channels.size());
  int size = spec_.input_size / 2;
  int ch = spec_.encoder_channels[0];
  layers_.push_back(conv_layer(ln::kStem, 3, ch, 3, 2, 1, 1, 1, true, size));

  auto add_block = [&](const std::string& prefix, int b, int in, int out, int dil) {
    layers_.push_back(conv_layer(ln::block(prefix, b, "dw"), in, in, 3, 1, dil, dil, in, true, size));
    layers_.push_back(conv_layer(ln::block(prefix, b, "pw"), in, out, 1, 1, 0, 1, 1, true, size));
  };

  std::vector<std::pair<int, int>> skips;  // (channels, size)
  for (int s = 0; s < stages; ++s) {
    const int c = spec_.encoder_channels[s];
    if (s > 0) {
      size /= 2;
      layers_.push_back(conv_layer(ln::downsample(s), ch, c, 3, 2, 1, 1, 1, true, size));
      ch = c;
    }
    for (int b = 0; b < spec_.encoder_blocks[s]; ++b) add_block(ln::encoder(s), b, ch, ch, 1);
    skips.emplace_back(ch, size);
  }

  layers_.push_back(
      conv_layer(ln::kExpand, ch, spec_.bottleneck_channels, 1, 1, 0, 1, 1, true, size));
  ch = spec_.bottleneck_channels;
  for (int b = 0; b < spec_.bottleneck_blocks; ++b) {
    add_block(ln::kBottleneck, b, ch, ch, spec_.bottleneck_dilation);
  }

  const int levels = static_cast<int>(spec_.decoder_channels.size());
  for (int d = 0; d < levels; ++d) {
    if (d > 0) size *= 2;
    int in = ch;
    if (d < stages) {
      const auto [skip_ch, skip_size] = skips[stages - 1 - d];
      if (skip_size != size) {
        throw Error(ErrorCode::kShape, "skip connection at decoder level " + std::to_string(d) +
                                           " joins " + std::to_string(size) + "px with " +
                                           std::to_string(skip_size) + "px");
      }
      in += skip_ch;
    }
    const int out = spec_.decoder_channels[d];
    add_block(ln::decoder(d), 0, in, out, 1);
    for (int b = 1; b < spec_.decoder_blocks[d]; ++b) add_block(ln::decoder(d), b, out, out, 1);
    ch = out;
  }
  if (size != spec_.input_size) {
    throw Error(ErrorCode::kShape, "decoder does not return to the input resolution");
  }

  if (spec_.eca_enabled) {
    LayerSpec eca;
    eca.name = ln::kEca;
    eca.kind = LayerKind::kEca;
    eca.in_channels = ch;
    eca.out_channels = ch;
    eca.kernel = spec_.eca_kernel;
    eca.padding = (spec_.eca_kernel - 1) / 2;
    eca.relu = false;
    eca.out_size = size;
    layers_.push_back(eca);
  }
  layers_.push_back(conv_layer(ln::kRefine, ch, ch, 3, 1, 1, 1, ch, true, size));
  layers_.push_back(conv_layer(ln::kHead, ch, 1, 1, 1, 0, 1, 1, false, size));

  for (std::size_t i = 0; i < layers_.size(); ++i) index_.emplace(layers_[i].name, i);
}

const LayerSpec& NetPlan::layer(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kMissingLayer, "network has no layer '" + std::string(name) + "'");
  }
  return layers_[it->second];
}

std::vector<std::pair<std::string, std::vector<int>>> NetPlan::parameter_shapes() const {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  for (const LayerSpec& l : layers_) {
    if (l.kind == LayerKind::kEca) {
      out.emplace_back(l.name + ".weight", std::vector<int>{l.kernel});
      continue;
    }
    out.emplace_back(l.name + ".weight",
                     std::vector<int>{l.out_channels, l.in_channels / l.groups, l.kernel, l.kernel});
    out.emplace_back(l.name + ".bias", std::vector<int>{l.out_channels});
  }
  return out;
}

WeightStore::WeightStore(NetSpec spec, std::vector<Param> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Param& p = params_[i];
    if (numel(p.shape) != p.values.size()) {
      throw Error(ErrorCode::kShape, "parameter '" + p.name + "' has " +
                                         std::to_string(p.values.size()) +
                                         " values for its shape");
    }
    if (!index_.emplace(p.name, i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate parameter name '" + p.name + "'");
    }
  }
}

const Param& WeightStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kMissingLayer, "weight store has no parameter '" + std::string(name) + "'");
  }
  return params_[it->second];
}

Param& WeightStore::get_mut(std::string_view name) {
  return const_cast<Param&>(static_cast<const WeightStore&>(*this).get(name));
}

bool WeightStore::contains(std::string_view name) const { return index_.contains(name); }

WeightStore build(const NetSpec& spec, std::uint64_t seed) {
  const NetPlan plan(spec);
  std::vector<Param> params;
  for (auto& [name, shape] : plan.parameter_shapes()) {
    Param p{name, shape, std::vector<float>(numel(shape), 0.0f)};
    const bool is_bias = name.ends_with(".bias");
    if (!is_bias) {
      // fan_in = in_ch/groups * k * k for conv kernels, k for the ECA kernel.
      const std::size_t fan_in = shape.size() == 4 ? numel(shape) / shape[0] : numel(shape);
      const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in)));
      std::mt19937_64 rng(splitmix64(seed ^ fnv1a64(name)));
      std::uniform_real_distribution<float> dist(-bound, bound);
      for (float& v : p.values) v = dist(rng);
    }
    params.push_back(std::move(p));
  }
  return WeightStore(spec, std::move(params));
}

ConvParams conv_params(const WeightStore& weights, const LayerSpec& layer) {
  const Param& w = weights.get(layer.name + ".weight");
  const Param& b = weights.get(layer.name + ".bias");
  if (w.shape.size() != 4) {
    throw Error(ErrorCode::kShape, "layer '" + layer.name + "' kernel is not rank 4");
  }
  ConvParams p;
  p.kernel = Tensor(Shape{w.shape[0], w.shape[1], w.shape[2], w.shape[3]}, w.values);
  p.bias = b.values;
  p.stride = layer.stride;
  p.padding = layer.padding;
  p.dilation = layer.dilation;
  p.groups = layer.groups;
  return p;
}

Tensor eca_block(const Tensor& features, std::span<const float> kernel) {
  const int k = static_cast<int>(kernel.size());
  if (k < 1 || k % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "eca_block: kernel size must be odd, got " +
                                                 std::to_string(k));
  }
  const Shape& s = features.shape();
  if (k > s.c) throw Error(ErrorCode::kShape, "eca_block: kernel larger than channel count");
  const Tensor pooled = global_avg_pool(features);
  const int pad = (k - 1) / 2;
  Tensor out = features;
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      float z = 0.0f;
      for (int j = 0; j < k; ++j) {
        const int src = c + j - pad;
        if (src < 0 || src >= s.c) continue;
        z += kernel[j] * pooled.at(n, src, 0, 0);
      }
      const float gate = 1.0f / (1.0f + std::exp(-z));
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] *= gate;
    }
  }
  return out;
}

Tensor forward(const WeightStore& weights, const Tensor& input, const ActivationObserver& observer) {
  const NetPlan plan(weights.spec());
  check_input(plan.spec(), input);
  FloatBackend be{weights, &observer};
  return run_graph(plan, be, input);
}

Tensor forward_features(const WeightStore& weights, const Tensor& input) {
  const NetPlan plan(weights.spec());
  check_input(plan.spec(), input);
  FloatBackend be{weights, nullptr, true};
  return run_graph(plan, be, input);
}

std::int64_t param_count(const WeightStore& weights) {
  std::int64_t total = 0;
  for (const Param& p : weights.params()) total += static_cast<std::int64_t>(p.values.size());
  return total;
}

std::int64_t param_count(const NetSpec& spec) {
  std::int64_t total = 0;
  for (const auto& [name, shape] : NetPlan(spec).parameter_shapes()) {
    total += static_cast<std::int64_t>(numel(shape));
  }
  return total;
}

std::int64_t count_macs(const NetSpec& spec) {
  std::int64_t total = 0;
  for (const LayerSpec& l : NetPlan(spec).layers()) {
    const std::int64_t pixels = static_cast<std::int64_t>(l.out_size) * l.out_size;
    if (l.kind == LayerKind::kEca) {
      // 1-D conv over the pooled vector plus one multiply per gated element.
      total += static_cast<std::int64_t>(l.in_channels) * l.kernel + pixels * l.in_channels;
      continue;
    }
    total += pixels * l.out_channels * l.kernel * l.kernel * (l.in_channels / l.groups);
  }
  return total;
}

std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
  ByteWriter w;
  w.raw(kPswMagic);
  w.u32(kPswVersion);
  w.u64(store.fingerprint());
  w.u32(static_cast<std::uint32_t>(store.params().size()));
  for (const Param& p : store.params()) {
    w.name(p.name);
    w.u8(0);  // dtype f32
    w.u8(static_cast<std::uint8_t>(p.shape.size()));
    for (int e : p.shape) w.u32(static_cast<std::uint32_t>(e));
    w.f32s(p.values);
  }
  return w.bytes();
}

WeightStore deserialize_weights(std::span<const std::uint8_t> bytes, const NetSpec& expected) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != kPswMagic) {
    throw Error(ErrorCode::kBadMagic, "not a PSW1 weight file");
  }
  const std::uint32_t version = r.u32();
  if (version != kPswVersion) {
    throw Error(ErrorCode::kFormat, "unsupported PSW1 version " + std::to_string(version));
  }
  const std::uint64_t fp = r.u64();
  if (fp != expected.fingerprint()) {
    throw Error(ErrorCode::kFingerprint, "weight file was built for a different network spec");
  }
  const auto shapes = NetPlan(expected).parameter_shapes();
  const std::uint32_t count = r.u32();
  if (count != shapes.size()) {
    throw Error(ErrorCode::kShape, "weight file has " + std::to_string(count) +
                                       " tensors, spec expects " + std::to_string(shapes.size()));
  }
  std::vector<Param> params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Param p;
    p.name = r.name();
    const std::uint8_t dtype = r.u8();
    if (dtype != 0) {
      throw Error(ErrorCode::kFormat, "tensor '" + p.name + "' has unsupported dtype " +
                                          std::to_string(dtype));
    }
    const std::uint8_t rank = r.u8();
    p.shape.resize(rank);
    for (int& e : p.shape) e = static_cast<int>(r.u32());
    const auto& [want_name, want_shape] = shapes[i];
    if (p.name != want_name) {
      throw Error(ErrorCode::kMissingLayer, "expected tensor '" + want_name + "', found '" +
                                                p.name + "'");
    }
    if (p.shape != want_shape) {
      throw Error(ErrorCode::kShape, "tensor '" + p.name + "' has a shape that does not match the network layout");
    }
    p.values.resize(numel(p.shape));
    r.f32s(p.values);
    params.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, std::to_string(r.remaining()) + " trailing bytes in weight file");
  }
  return WeightStore(expected, std::move(params));
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  write_file(path, serialize_weights(store));
}

WeightStore load_weights(const std::filesystem::path& path, const NetSpec& expected) {
  return deserialize_weights(read_file(path), expected);
}

std::int64_t psw1_size(const NetSpec& spec) {
  std::int64_t total = 4 + 4 + 8 + 4;
  for (const auto& [name, shape] : NetPlan(spec).parameter_shapes()) {
    total += 2 + static_cast<std::int64_t>(name.size()) + 1 + 1 + 4 * static_cast<std::int64_t>(shape.size()) +
             4 * static_cast<std::int64_t>(numel(shape));
  }
  return total;
}

}  // namespace picoseg
