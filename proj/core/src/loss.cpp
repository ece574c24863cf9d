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

#include "picoseg/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "picoseg/error.hpp"

namespace picoseg {

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw Error(ErrorCode::kShape, std::string(op) + ": shape mismatch " + a.shape().str() +
                                       " vs " + b.shape().str());
  }
}

void require_binary(const Tensor& t, const char* op) {
  for (float v : t.data()) {
    if (v != 0.0f && v != 1.0f) {
      throw Error(ErrorCode::kInvalidArgument, std::string(op) + ": target mask must be binary");
    }
  }
}

// Temperature-sigmoided probabilities together with p * (1 - p).
struct Probs {
  std::vector<double> p;
  std::vector<double> slope;  // p * (1 - p), computed without cancellation
};

Probs probs(const Tensor& logits, double tau) {
  Probs out;
  out.p.resize(logits.size());
  out.slope.resize(logits.size());
  auto src = logits.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double z = tau * src[i];
    out.p[i] = logistic(z);
    out.slope[i] = logistic(z) * logistic(-z);
  }
  return out;
}

std::vector<double> as_double(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

double dice(const std::vector<double>& p, const std::vector<double>& q, double eps) {
  double inter = 0.0, sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] * q[i];
    sp += p[i];
    sq += q[i];
  }
  return 1.0 - (2.0 * inter + eps) / (sp + sq + eps);
}

// d dice / d p_i for fixed q.
std::vector<double> dice_grad(const std::vector<double>& p, const std::vector<double>& q,
                              double eps) {
  double inter = 0.0, sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] * q[i];
    sp += p[i];
    sq += q[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sp + sq + eps;
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = -(2.0 * q[i] * den - num) / (den * den);
  return g;
}

struct BceWeights {
  double pos = 1.0;
  double neg = 1.0;
};

BceWeights balance(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  const double n_pos = std::accumulate(y.begin(), y.end(), 0.0);
  const double n_neg = n - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return {};
  return {n / (2.0 * n_pos), n / (2.0 * n_neg)};
}

double alpha_from(std::span<const double> confidences) {
  if (confidences.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "total_loss: no confidence values supplied");
  }
  const double mean = std::accumulate(confidences.begin(), confidences.end(), 0.0) /
                      static_cast<double>(confidences.size());
  return std::clamp(mean, 0.0, 1.0);
}

void check_inputs(const Tensor& student, const Tensor& teacher, const Tensor& target,
                  const LossConfig& cfg) {
  cfg.validate();
  require_same(student, teacher, "total_loss");
  require_same(student, target, "total_loss");
  require_binary(target, "total_loss");
}

}  // namespace

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (!(area_ratio > 0.0 && area_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "area ratio must lie in (0, 1]");
  }
  if (!(dice_eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dice eps must be > 0");
}

Tensor sigmoid_tau(const Tensor& x, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  Tensor out = x;
  for (float& v : out.data()) v = static_cast<float>(logistic(tau * v));
  return out;
}

double dice_loss(const Tensor& p, const Tensor& q, double eps) {
  require_same(p, q, "dice_loss");
  return dice(as_double(p), as_double(q), eps);
}

double teacher_loss(const Tensor& student, const Tensor& teacher, const LossConfig& cfg) {
  cfg.validate();
  require_same(student, teacher, "teacher_loss");
  const Probs ps = probs(student, cfg.temperature);
  const Probs pt = probs(teacher, cfg.temperature);
  double mse = 0.0;
  for (std::size_t i = 0; i < ps.p.size(); ++i) {
    const double d = ps.p[i] - pt.p[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ps.p.size());
  return mse + dice(ps.p, pt.p, cfg.dice_eps);
}

double gt_loss(const Tensor& student, const Tensor& target, const LossConfig& cfg) {
  cfg.validate();
  require_same(student, target, "gt_loss");
  require_binary(target, "gt_loss");
  const std::vector<double> y = as_double(target);
  const BceWeights w = balance(y);
  auto logits = student.data();
  double bce = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = cfg.temperature * logits[i];
    bce += y[i] > 0.5 ? w.pos * softplus(-z) : w.neg * softplus(z);
  }
  bce /= static_cast<double>(y.size());
  return bce + dice(probs(student, cfg.temperature).p, y, cfg.dice_eps);
}

double area_loss(const Tensor& student, const Tensor& target, const LossConfig& cfg) {
  cfg.validate();
  require_same(student, target, "area_loss");
  const double gt_area = std::accumulate(target.data().begin(), target.data().end(), 0.0);
  if (gt_area == 0.0) return 0.0;
  const Probs ps = probs(student, cfg.temperature);
  const double pred_area = std::accumulate(ps.p.begin(), ps.p.end(), 0.0);
  return std::max(0.0, cfg.area_ratio - pred_area / gt_area);
}

LossBreakdown total_loss(const Tensor& student, const Tensor& teacher, const Tensor& target,
                         std::span<const double> confidences, const LossConfig& cfg) {
  check_inputs(student, teacher, target, cfg);
  LossBreakdown b;
  b.alpha = alpha_from(confidences);
  b.l_teacher = teacher_loss(student, teacher, cfg);
  b.l_gt = gt_loss(student, target, cfg);
  b.l_area = area_loss(student, target, cfg);
  b.l_total = b.alpha * b.l_teacher + (1.0 - b.alpha) * b.l_gt + cfg.area_weight * b.l_area;
  return b;
}

LossBreakdown total_loss(const Tensor& student, const Tensor& teacher, const Tensor& target,
                         double confidence, const LossConfig& cfg) {
  return total_loss(student, teacher, target, std::span<const double>(&confidence, 1), cfg);
}

Tensor loss_grad(const Tensor& student, const Tensor& teacher, const Tensor& target,
                 std::span<const double> confidences, const LossConfig& cfg) {
  check_inputs(student, teacher, target, cfg);
  const double alpha = alpha_from(confidences);
  const double tau = cfg.temperature;
  const std::size_t n = student.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Probs ps = probs(student, tau);
  const std::vector<double> y = as_double(target);

  // Gradient w.r.t. the probabilities p_i, chained through dp/dlogit at the end.
  std::vector<double> dp(n, 0.0);

  if (alpha > 0.0) {
    const Probs pt = probs(teacher, tau);
    const std::vector<double> gd = dice_grad(ps.p, pt.p, cfg.dice_eps);
    for (std::size_t i = 0; i < n; ++i) {
      dp[i] += alpha * (2.0 * (ps.p[i] - pt.p[i]) * inv_n + gd[i]);
    }
  }

  std::vector<double> dlogit(n, 0.0);
  if (alpha < 1.0) {
    const double beta = 1.0 - alpha;
    const std::vector<double> gd = dice_grad(ps.p, y, cfg.dice_eps);
    for (std::size_t i = 0; i < n; ++i) dp[i] += beta * gd[i];
    // BCE on logits: d/dz softplus(-z) = p - 1, d/dz softplus(z) = p.
    const BceWeights w = balance(y);
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = y[i] > 0.5 ? w.pos : w.neg;
      dlogit[i] += beta * wi * inv_n * tau * (ps.p[i] - y[i]);
    }
  }

  const double gt_area = std::accumulate(y.begin(), y.end(), 0.0);
  if (gt_area > 0.0) {
    const double pred_area = std::accumulate(ps.p.begin(), ps.p.end(), 0.0);
    if (cfg.area_ratio - pred_area / gt_area > 0.0) {
      for (std::size_t i = 0; i < n; ++i) dp[i] += -cfg.area_weight / gt_area;
    }
  }

  Tensor grad(student.shape());
  auto out = grad.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(dlogit[i] + dp[i] * tau * ps.slope[i]);
  }
  return grad;
}

Tensor loss_grad(const Tensor& student, const Tensor& teacher, const Tensor& target,
                 double confidence, const LossConfig& cfg) {
  return loss_grad(student, teacher, target, std::span<const double>(&confidence, 1), cfg);
}

}  // namespace picoseg
