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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picoseg/tensor.hpp"

namespace picoseg {

/// Architecture description of the encoder-decoder segmenter.
///
/// The default layout lands at ~1.37M parameters and ~0.33G MACs for a
/// 96x96 input:
///   stem      full 3x3 stride-2 conv 3 -> 48 (96 -> 48)
///   encoder   stages of {48, 96, 160, 256} channels at 48/24/12/6 px,
///             `encoder_blocks` depthwise-separable blocks each, with a full
///             stride-2 3x3 conv C -> C_next between stages
///   bottleneck 1x1 expand to 320, then depthwise-separable blocks whose
///             depthwise conv is dilated
///   decoder   one level per encoder stage (concat skip, DS blocks) plus a
///             skip-less full-resolution level; widths `decoder_channels`
///   output    ECA, depthwise refinement, 1x1 logit head
struct NetSpec {
  int input_size = 96;
  std::vector<int> encoder_channels{48, 96, 160, 256};
  std::vector<int> encoder_blocks{2, 2, 2, 2};
  int bottleneck_channels = 320;
  int bottleneck_dilation = 2;
  int bottleneck_blocks = 1;
  std::vector<int> decoder_channels{256, 160, 128, 96, 48};
  std::vector<int> decoder_blocks{2, 2, 2, 2, 3};
  int eca_kernel = 3;
  bool eca_enabled = true;
  std::string downsample = "conv3x3-s2";

  /// Throws kInvalidArgument describing the first violated invariant.
  void validate() const;
  std::string canonical() const;
  std::uint64_t fingerprint() const;
};

enum class LayerKind { kConv, kEca };

/// One parameterised layer of the network, in execution order.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
  bool relu = true;
  int out_size = 0;  // spatial extent of the (square) output
};

class NetPlan {
 public:
  explicit NetPlan(const NetSpec& spec);

  const NetSpec& spec() const { return spec_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(std::string_view name) const;

  /// (name, shape) of every parameter tensor, in storage order.
  std::vector<std::pair<std::string, std::vector<int>>> parameter_shapes() const;

 private:
  NetSpec spec_;
  std::vector<LayerSpec> layers_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// A named parameter tensor of arbitrary rank.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;

  bool operator==(const Param&) const = default;
};

/// Ordered parameter container tied to the NetSpec it was built for.
class WeightStore {
 public:
  WeightStore(NetSpec spec, std::vector<Param> params);

  const NetSpec& spec() const { return spec_; }
  std::uint64_t fingerprint() const { return spec_.fingerprint(); }
  const std::vector<Param>& params() const { return params_; }

  /// Throws kMissingLayer if absent.
  const Param& get(std::string_view name) const;
  Param& get_mut(std::string_view name);
  bool contains(std::string_view name) const;

  bool operator==(const WeightStore& other) const {
    return spec_.canonical() == other.spec_.canonical() && params_ == other.params_;
  }

 private:
  NetSpec spec_;
  std::vector<Param> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Seeded He-uniform kernels and zero biases. Each tensor draws from its own
/// stream derived from (seed, name), so the same layer gets the same values
/// regardless of what else the NetSpec contains.
WeightStore build(const NetSpec& spec, std::uint64_t seed);

/// Called with every recorded activation site during a float forward.
using ActivationObserver = std::function<void(std::string_view site, const Tensor& value)>;

/// Float forward pass. Input (N, 3, S, S) -> logits (N, 1, S, S).
Tensor forward(const WeightStore& weights, const Tensor& input,
               const ActivationObserver& observer = {});

/// Same as forward() but also returns the (N, C, S, S) features entering the
/// 1x1 head.
Tensor forward_features(const WeightStore& weights, const Tensor& input);

/// Channel attention: gate_c = sigmoid(conv1d(mean_c, kernel)) with zero
/// padding (k - 1) / 2; each channel is scaled by its gate.
Tensor eca_block(const Tensor& features, std::span<const float> kernel);

std::int64_t param_count(const WeightStore& weights);
std::int64_t param_count(const NetSpec& spec);
std::int64_t count_macs(const NetSpec& spec);

/// Extracts conv parameters for a named layer.
ConvParams conv_params(const WeightStore& weights, const LayerSpec& layer);

// PSW1 weight files.
std::vector<std::uint8_t> serialize_weights(const WeightStore& store);
WeightStore deserialize_weights(std::span<const std::uint8_t> bytes, const NetSpec& expected);
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path, const NetSpec& expected = NetSpec{});
/// Exact PSW1 byte size for a spec.
std::int64_t psw1_size(const NetSpec& spec);

}  // namespace picoseg
