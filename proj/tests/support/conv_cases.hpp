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

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

#include "picoseg/tensor.hpp"
#include "test_support.hpp"

namespace picoseg::test {

struct ConvCase {
  Tensor input;
  ConvParams params;
};

// Seeded sweep over groups {1, C}, stride {1, 2}, dilation {1, 2} and kernel
// {1, 3}; the 16 combinations repeat with fresh shapes and values.
inline std::vector<ConvCase> conv_sweep(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> channels(1, 6), extent(5, 13), batch(1, 2), out_mult(1, 3);
  std::vector<ConvCase> cases;
  for (int i = 0; i < count; ++i) {
    const bool depthwise = (i & 1) != 0;
    const int stride = (i & 2) ? 2 : 1;
    const int dilation = (i & 4) ? 2 : 1;
    const int k = (i & 8) ? 3 : 1;
    const int c = channels(rng);
    const int groups = depthwise ? c : 1;
    const int out = depthwise ? c * out_mult(rng) : channels(rng);
    const int pad = k == 3 ? dilation * (i % 3 == 0 ? 0 : 1) : 0;
    ConvCase cc;
    cc.input = random_tensor(Shape{batch(rng), c, extent(rng), extent(rng)}, rng);
    cc.params.kernel = random_tensor(Shape{out, c / groups, k, k}, rng);
    cc.params.bias.resize(static_cast<std::size_t>(out));
    std::uniform_real_distribution<float> b(-0.5f, 0.5f);
    for (float& v : cc.params.bias) v = b(rng);
    cc.params.stride = stride;
    cc.params.padding = pad;
    cc.params.dilation = dilation;
    cc.params.groups = groups;
    cases.push_back(std::move(cc));
  }
  return cases;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.data()[i]) != std::bit_cast<std::uint32_t>(b.data()[i])) return false;
  }
  return true;
}

}  // namespace picoseg::test
