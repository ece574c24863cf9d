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

#include "picoseg/tensor.hpp"

namespace picoseg {

struct LossConfig {
  double temperature = 5.0;
  double area_ratio = 0.4;
  double area_weight = 0.4;
  double dice_eps = 1e-6;

  void validate() const;
};

struct LossBreakdown {
  double l_teacher = 0.0;
  double l_gt = 0.0;
  double l_area = 0.0;
  double l_total = 0.0;
  double alpha = 0.0;
};

/// sigmoid(tau * x), elementwise.
Tensor sigmoid_tau(const Tensor& x, double tau);

/// 1 - (2 sum(p q) + eps) / (sum p + sum q + eps).
double dice_loss(const Tensor& p, const Tensor& q, double eps);

/// MSE + Dice between the temperature-sigmoided student and teacher logits.
double teacher_loss(const Tensor& student, const Tensor& teacher, const LossConfig& cfg);

/// Class-balanced BCE on sigmoid_tau(student) plus Dice against the binary
/// target. Positives are weighted N / (2 N_pos), negatives N / (2 N_neg)
/// (inverse frequency, mean weight 1). Single-class targets use weight 1.
double gt_loss(const Tensor& student, const Tensor& target, const LossConfig& cfg);

/// max(0, rho - sum sigmoid_tau(student) / sum target); 0 for an empty target.
double area_loss(const Tensor& student, const Tensor& target, const LossConfig& cfg);

/// alpha = clamp(mean(confidences), 0, 1). All sums run over the whole batch
/// tensor, so a batch is scored as one prediction.
LossBreakdown total_loss(const Tensor& student, const Tensor& teacher, const Tensor& target,
                         std::span<const double> confidences, const LossConfig& cfg);
LossBreakdown total_loss(const Tensor& student, const Tensor& teacher, const Tensor& target,
                         double confidence, const LossConfig& cfg);

/// d l_total / d student, same shape as `student`. The area hinge uses the
/// gradient of its active branch (0 at the kink).
Tensor loss_grad(const Tensor& student, const Tensor& teacher, const Tensor& target,
                 std::span<const double> confidences, const LossConfig& cfg);
Tensor loss_grad(const Tensor& student, const Tensor& teacher, const Tensor& target,
                 double confidence, const LossConfig& cfg);

}  // namespace picoseg
