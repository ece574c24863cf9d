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

#include "picoseg/trainer.hpp"

#include <cmath>

#include "picoseg/error.hpp"
#include "picoseg/graph.hpp"

namespace picoseg {

namespace {

void validate(const AdamWConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "AdamW betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "AdamW eps must be > 0");
  if (!(cfg.weight_decay >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "weight decay must be >= 0");
  }
}

// Stacks (1, C, H, W) tensors along the batch axis.
Tensor stack(const std::vector<Tensor>& parts) {
  Shape s = parts.front().shape();
  s.n = static_cast<int>(parts.size());
  Tensor out(s);
  std::size_t offset = 0;
  for (const Tensor& t : parts) {
    if (t.shape().n != 1 || t.shape().c != s.c || t.shape().h != s.h || t.shape().w != s.w) {
      throw Error(ErrorCode::kShape, "training samples disagree in shape: " + t.shape().str());
    }
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + offset);
    offset += t.size();
  }
  return out;
}

struct AdamState {
  std::vector<double> m, v;
};

void adamw_step(std::vector<double>& p, std::span<const double> g, AdamState& st,
                const AdamWConfig& cfg, int t) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] -= cfg.lr * cfg.weight_decay * p[i];
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace

FitResult fit_head(const WeightStore& weights, std::span<const TrainingSample> dataset, int steps,
                   const AdamWConfig& optimizer, const LossConfig& loss) {
  if (dataset.empty()) throw Error(ErrorCode::kEmpty, "fit_head: dataset is empty");
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "fit_head: steps must be >= 0");
  validate(optimizer);
  loss.validate();

  const NetPlan plan(weights.spec());
  const LayerSpec& head = plan.layer(layer_names::kHead);

  std::vector<Tensor> feats, teachers, targets;
  std::vector<double> confidences;
  for (const TrainingSample& s : dataset) {
    validate(s.teacher);
    feats.push_back(forward_features(weights, s.image));
    teachers.push_back(s.teacher.logits);
    targets.push_back(s.target);
    confidences.push_back(s.teacher.confidence);
  }
  const Tensor features = stack(feats);
  feats.clear();
  const Tensor teacher = stack(teachers);
  const Tensor target = stack(targets);
  if (teacher.shape() != target.shape() || features.shape().h != target.shape().h) {
    throw Error(ErrorCode::kShape, "fit_head: teacher/target/feature shapes disagree");
  }

  ConvParams params = conv_params(weights, head);
  const int channels = head.in_channels;
  // Parameter vector: C kernel taps then the bias.
  std::vector<double> theta(channels + 1);
  for (int c = 0; c < channels; ++c) theta[c] = params.kernel.data()[c];
  theta[channels] = params.bias[0];
  AdamState state{std::vector<double>(theta.size(), 0.0), std::vector<double>(theta.size(), 0.0)};
  std::vector<double> grad(theta.size());

  const Shape fs = features.shape();
  const std::size_t plane = fs.plane();
  FitResult result{weights, {}};
  result.loss_trace.reserve(static_cast<std::size_t>(steps));
  for (int step = 1; step <= steps; ++step) {
    for (int c = 0; c < channels; ++c) params.kernel.data()[c] = static_cast<float>(theta[c]);
    params.bias[0] = static_cast<float>(theta[channels]);
    const Tensor logits = conv2d(features, params);

    const LossBreakdown lb = total_loss(logits, teacher, target, confidences, loss);
    if (!std::isfinite(lb.l_total)) {
      throw Error(ErrorCode::kNonFinite, "fit_head: loss became non-finite at step " +
                                             std::to_string(step) + " (l_teacher=" +
                                             std::to_string(lb.l_teacher) + ", l_gt=" +
                                             std::to_string(lb.l_gt) + ")");
    }
    result.loss_trace.push_back(lb.l_total);

    const Tensor g = loss_grad(logits, teacher, target, confidences, loss);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int n = 0; n < fs.n; ++n) {
      const float* gp = g.plane(n, 0);
      for (int c = 0; c < channels; ++c) {
        const float* fp = features.plane(n, c);
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += static_cast<double>(gp[i]) * fp[i];
        grad[c] += acc;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
      grad[channels] += acc;
    }
    adamw_step(theta, grad, state, optimizer, step);
  }

  Param& w = result.weights.get_mut(head.name + ".weight");
  Param& b = result.weights.get_mut(head.name + ".bias");
  if (steps > 0) {
    for (int c = 0; c < channels; ++c) w.values[c] = static_cast<float>(theta[c]);
    b.values[0] = static_cast<float>(theta[channels]);
  }
  return result;
}

double head_mean(std::span<const double> trace, std::size_t window) {
  if (trace.empty() || window == 0) throw Error(ErrorCode::kEmpty, "head_mean: empty trace");
  window = std::min(window, trace.size());
  double s = 0.0;
  for (std::size_t i = 0; i < window; ++i) s += trace[i];
  return s / static_cast<double>(window);
}

double tail_mean(std::span<const double> trace, std::size_t window) {
  if (trace.empty() || window == 0) throw Error(ErrorCode::kEmpty, "tail_mean: empty trace");
  window = std::min(window, trace.size());
  double s = 0.0;
  for (std::size_t i = trace.size() - window; i < trace.size(); ++i) s += trace[i];
  return s / static_cast<double>(window);
}

}  // namespace picoseg
