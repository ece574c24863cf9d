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

#include <string>
#include <utility>
#include <vector>

#include "picoseg/net.hpp"

namespace picoseg {

// Layer naming shared by the plan, the float path and the int8 path.
namespace layer_names {
inline std::string block(const std::string& prefix, int b, const char* part) {
  return prefix + ".b" + std::to_string(b) + "." + part;
}
inline std::string encoder(int stage) { return "enc" + std::to_string(stage); }
inline std::string decoder(int level) { return "dec" + std::to_string(level); }
inline std::string downsample(int stage) { return encoder(stage) + ".down"; }
inline std::string concat_site(int level) { return decoder(level) + ".concat"; }
inline constexpr const char* kInputSite = "input";
inline constexpr const char* kStem = "stem";
inline constexpr const char* kExpand = "bottleneck.expand";
inline constexpr const char* kBottleneck = "bottleneck";
inline constexpr const char* kEca = "eca";
inline constexpr const char* kEcaPoolSite = "eca.pool";
inline constexpr const char* kRefine = "refine.dw";
inline constexpr const char* kHead = "head";
}  // namespace layer_names

/// Walks the network topology, delegating every operation to `be`.
///
/// Backend requirements (Value is the backend's activation type):
///   Value input(Value)
///   Value conv(const LayerSpec&, const Value&)        conv + optional ReLU
///   Value upsample(const Value&)
///   Value concat(const std::string& site, const Value&, const Value&)
///   Value eca(const LayerSpec&, const Value&)
///   Value head(const LayerSpec&, const Value&)        final 1x1, no activation
template <class Backend>
typename Backend::Value run_graph(const NetPlan& plan, Backend& be, typename Backend::Value x) {
  namespace ln = layer_names;
  using Value = typename Backend::Value;
  const NetSpec& spec = plan.spec();

  auto ds_blocks = [&](const std::string& prefix, int count, Value v) {
    for (int b = 0; b < count; ++b) {
      v = be.conv(plan.layer(ln::block(prefix, b, "dw")), v);
      v = be.conv(plan.layer(ln::block(prefix, b, "pw")), v);
    }
    return v;
  };

  x = be.input(std::move(x));
  x = be.conv(plan.layer(ln::kStem), x);

  const int stages = static_cast<int>(spec.encoder_channels.size());
  std::vector<Value> skips;
  skips.reserve(stages);
  for (int s = 0; s < stages; ++s) {
    if (s > 0) x = be.conv(plan.layer(ln::downsample(s)), x);
    x = ds_blocks(ln::encoder(s), spec.encoder_blocks[s], std::move(x));
    skips.push_back(x);
  }

  x = be.conv(plan.layer(ln::kExpand), x);
  x = ds_blocks(ln::kBottleneck, spec.bottleneck_blocks, std::move(x));

  const int levels = static_cast<int>(spec.decoder_channels.size());
  for (int d = 0; d < levels; ++d) {
    if (d > 0) x = be.upsample(x);
    if (d < stages) x = be.concat(ln::concat_site(d), x, skips[stages - 1 - d]);
    x = ds_blocks(ln::decoder(d), spec.decoder_blocks[d], std::move(x));
  }

  if (spec.eca_enabled) x = be.eca(plan.layer(ln::kEca), x);
  x = be.conv(plan.layer(ln::kRefine), x);
  return be.head(plan.layer(ln::kHead), x);
}

}  // namespace picoseg
