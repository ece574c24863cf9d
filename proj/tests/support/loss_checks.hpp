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

#include "picoseg/loss.hpp"
#include "test_support.hpp"

namespace picoseg::test {

struct LossInstance {
  Tensor student, teacher, target;
  double confidence = 0.0;
};

inline LossInstance random_loss_instance(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<double> conf(-0.2, 1.2);
  std::bernoulli_distribution coin(0.4);
  LossInstance li;
  li.student = random_tensor(shape, rng, -1.5f, 1.5f);
  li.teacher = random_tensor(shape, rng, -2.0f, 2.0f);
  li.target = Tensor(shape);
  for (float& v : li.target.data()) v = coin(rng) ? 1.0f : 0.0f;
  li.confidence = conf(rng);
  return li;
}

// Largest deviation from l_total = a*l_t + (1-a)*l_gt + 0.4*l_area, with a
// recomputed here; negative terms count as an infinite deviation.
inline double breakdown_identity_error(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ext(2, 12);
  const LossConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const LossInstance li = random_loss_instance(rng, Shape{1, 1, ext(rng), ext(rng)});
    const LossBreakdown b = total_loss(li.student, li.teacher, li.target, li.confidence, cfg);
    const double a = std::clamp(li.confidence, 0.0, 1.0);
    if (b.l_teacher < 0 || b.l_gt < 0 || b.l_area < 0 || b.l_total < 0 || b.alpha != a) return INFINITY;
    worst = std::max(worst, std::abs(b.l_total - (a * b.l_teacher + (1 - a) * b.l_gt + 0.4 * b.l_area)));
  }
  return worst;
}

// max_i |analytic_i - fd_i| / max_i |fd_i| for central differences.
inline double fd_relative_error(const LossInstance& li, double h = 1e-3) {
  const LossConfig cfg;
  const Tensor g = loss_grad(li.student, li.teacher, li.target, li.confidence, cfg);
  double max_err = 0.0, max_fd = 0.0;
  for (std::size_t i = 0; i < li.student.size(); ++i) {
    Tensor plus = li.student, minus = li.student;
    plus.data()[i] += static_cast<float>(h);
    minus.data()[i] -= static_cast<float>(h);
    const double step = static_cast<double>(plus.data()[i]) - minus.data()[i];
    const double fd = (total_loss(plus, li.teacher, li.target, li.confidence, cfg).l_total -
                       total_loss(minus, li.teacher, li.target, li.confidence, cfg).l_total) /
                      step;
    max_err = std::max(max_err, std::abs(fd - g.data()[i]));
    max_fd = std::max(max_fd, std::abs(fd));
  }
  return max_err / std::max(max_fd, 1e-12);
}

// 6x6 instances kept away from the area-hinge kink.
inline double fd_sweep_worst(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  const LossConfig cfg;
  double worst = 0.0;
  int done = 0;
  while (done < count) {
    LossInstance li = random_loss_instance(rng, Shape{1, 1, 6, 6});
    double gt = 0.0, soft = 0.0;
    const Tensor p = sigmoid_tau(li.student, cfg.temperature);
    for (std::size_t i = 0; i < p.size(); ++i) {
      gt += li.target.data()[i];
      soft += p.data()[i];
    }
    if (gt > 0 && std::abs(cfg.area_ratio - soft / gt) < 0.05) continue;
    worst = std::max(worst, fd_relative_error(li));
    ++done;
  }
  return worst;
}

}  // namespace picoseg::test
