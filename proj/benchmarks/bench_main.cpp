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

#include <random>

#include <benchmark/benchmark.h>

#include "picoseg/net.hpp"
#include "picoseg/quant.hpp"
#include "picoseg/tensor.hpp"

namespace {

using namespace picoseg;

Tensor noise(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  Tensor t(s);
  for (float& v : t.data()) v = d(rng);
  return t;
}

ConvParams conv(int in, int out, int k, int groups) {
  ConvParams p;
  p.kernel = noise(Shape{out, in / groups, k, k}, 2);
  p.bias.assign(static_cast<std::size_t>(out), 0.1f);
  p.padding = k / 2;
  p.groups = groups;
  return p;
}

// args: channels, extent
void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const Tensor x = noise(Shape{1, c, s, s}, 1);
  const ConvParams p = conv(c, c, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
  state.counters["MAC/s"] = benchmark::Counter(9.0 * c * c * s * s, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3)->Args({48, 48})->Args({96, 24})->Unit(benchmark::kMicrosecond);

void BM_Depthwise3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const Tensor x = noise(Shape{1, c, s, s}, 1);
  const ConvParams p = conv(c, c, 3, c);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
}
BENCHMARK(BM_Depthwise3x3)->Args({48, 96})->Args({256, 12})->Unit(benchmark::kMicrosecond);

void BM_Pointwise(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const Tensor x = noise(Shape{1, c, s, s}, 1);
  const ConvParams p = conv(c, c, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
}
BENCHMARK(BM_Pointwise)->Args({48, 96})->Args({160, 24})->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  const WeightStore w = build(NetSpec{}, 42);
  const Tensor x = noise(Shape{1, 3, 96, 96}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(w, x));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_QuantizedForward(benchmark::State& state) {
  const WeightStore w = build(NetSpec{}, 42);
  const QuantizedModel q = quantize_model(w, synthetic_calibration(7, 2));
  const Tensor x = noise(Shape{1, 3, 96, 96}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(quantized_forward(q, x));
}
BENCHMARK(BM_QuantizedForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
