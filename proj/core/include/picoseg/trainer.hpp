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

#include <span>
#include <vector>

#include "picoseg/loss.hpp"
#include "picoseg/net.hpp"
#include "picoseg/teacher_cache.hpp"

namespace picoseg {

struct TrainingSample {
  Tensor image;  // (1, 3, S, S)
  TeacherRecord teacher;
  Tensor target;  // (1, 1, S, S), binary
};

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct FitResult {
  WeightStore weights;
  std::vector<double> loss_trace;  // full-batch l_total before each step
};

/// Trains only the final 1x1 head with AdamW on full-batch l_total.
///
/// The head is linear in the frozen pre-head features, so its gradient is
/// the exact contraction of loss_grad() with those features; nothing else in
/// the network is touched.
FitResult fit_head(const WeightStore& weights, std::span<const TrainingSample> dataset, int steps,
                   const AdamWConfig& optimizer = {}, const LossConfig& loss = {});

/// Mean of the first (or last) `window` entries of a trace.
double head_mean(std::span<const double> trace, std::size_t window);
double tail_mean(std::span<const double> trace, std::size_t window);

}  // namespace picoseg
