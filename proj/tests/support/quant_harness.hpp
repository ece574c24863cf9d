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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "picoseg/quant.hpp"
#include "picoseg/roi.hpp"

namespace picoseg::test {

// Uniform [0, 1) RGB noise, normalised like a real crop.
inline Tensor noise_batch(std::mt19937_64& rng, int n, int size = 96) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t(Shape{n, 3, size, size});
  for (float& v : t.data()) v = u(rng);
  normalize_input(t);
  return t;
}

inline CalibrationSet noise_calibration(std::uint64_t seed, int batches, int batch_size) {
  std::mt19937_64 rng(seed);
  CalibrationSet c;
  for (int i = 0; i < batches; ++i) c.batches.push_back(noise_batch(rng, batch_size));
  return c;
}

inline std::vector<Tensor> noise_inputs(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> v;
  for (int i = 0; i < count; ++i) v.push_back(noise_batch(rng, 1));
  return v;
}

// Largest |w - scale * q| / scale over every weight tensor of a model; the
// bound is 0.5.
inline double worst_dequant_error_in_steps(const WeightStore& w, const QuantizedModel& q) {
  double worst = 0.0;
  for (const Param& p : w.params()) {
    const QTensor& t = q.tensor(p.name);
    const std::size_t per = t.channel_size();
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double s = t.scales[i / per];
      const double err = std::abs(static_cast<double>(p.values[i]) - s * t.codes[i]) / s;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace picoseg::test
