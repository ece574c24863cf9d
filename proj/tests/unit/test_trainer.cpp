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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/test_support.hpp"
#include "picoseg/loss.hpp"
#include "picoseg/synth.hpp"
#include "picoseg/trainer.hpp"

using namespace picoseg;
using picoseg::test::error_of;

namespace {

const std::vector<TrainingSample>& samples() {
  static const std::vector<TrainingSample> s = synth::training_set(5, 3);
  return s;
}

const WeightStore& start() {
  static const WeightStore w = build(NetSpec{}, 42);
  return w;
}

Tensor stack(const std::vector<Tensor>& parts) {
  Shape s = parts.front().shape();
  s.n = static_cast<int>(parts.size());
  Tensor out(s);
  std::size_t off = 0;
  for (const Tensor& t : parts) {
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + off);
    off += t.size();
  }
  return out;
}

}  // namespace

TEST_CASE("zero steps or zero learning rate leave the weights alone") {
  const FitResult none = fit_head(start(), samples(), 0);
  CHECK(none.loss_trace.empty());
  CHECK(none.weights == start());

  AdamWConfig frozen;
  frozen.lr = 0.0;
  const FitResult flat = fit_head(start(), samples(), 3, frozen);
  REQUIRE(flat.loss_trace.size() == 3);
  CHECK(flat.loss_trace[0] == flat.loss_trace[1]);
  CHECK(flat.loss_trace[1] == flat.loss_trace[2]);
  CHECK(flat.weights == start());
}

TEST_CASE("training is deterministic and only touches the head") {
  const FitResult a = fit_head(start(), samples(), 4);
  const FitResult b = fit_head(start(), samples(), 4);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.weights == b.weights);
  CHECK(a.loss_trace.back() < a.loss_trace.front());
  for (const Param& p : start().params()) {
    const bool head = p.name.starts_with("head.");
    CHECK((a.weights.get(p.name).values == p.values) != head);
  }
}

TEST_CASE("first AdamW step moves each head parameter by lr against the gradient sign") {
  // Loss as a function of the head, on frozen features.
  std::vector<Tensor> feats, teach, targ;
  std::vector<double> conf;
  for (const auto& s : samples()) {
    feats.push_back(forward_features(start(), s.image));
    teach.push_back(s.teacher.logits);
    targ.push_back(s.target);
    conf.push_back(s.teacher.confidence);
  }
  const Tensor f = stack(feats), t = stack(teach), y = stack(targ);
  const Param& w0 = start().get("head.weight");
  const Param& b0 = start().get("head.bias");
  auto loss_at = [&](int idx, double delta) {
    ConvParams p;
    p.kernel = Tensor(Shape{1, 48, 1, 1}, w0.values);
    p.bias = b0.values;
    if (idx < 48) p.kernel.data()[idx] += static_cast<float>(delta);
    else p.bias[0] += static_cast<float>(delta);
    return total_loss(conv2d(f, p), t, y, conf, LossConfig{}).l_total;
  };

  const AdamWConfig cfg;
  const FitResult one = fit_head(start(), samples(), 1, cfg);
  CHECK(one.loss_trace[0] == doctest::Approx(loss_at(0, 0.0)).epsilon(1e-12));
  for (int idx : {0, 17, 47, 48}) {
    const double g = loss_at(idx, 1e-2) - loss_at(idx, -1e-2);
    REQUIRE(std::abs(g) > 1e-9);
    const double before = idx < 48 ? w0.values[idx] : b0.values[0];
    const double after = idx < 48 ? one.weights.get("head.weight").values[idx] : one.weights.get("head.bias").values[0];
    const double want = before - cfg.lr * cfg.weight_decay * before - cfg.lr * (g > 0 ? 1.0 : -1.0);
    CHECK(std::abs(after - want) < 1e-7);
  }
}

TEST_CASE("fit_head validation") {
  CHECK(error_of([] { fit_head(start(), std::vector<TrainingSample>{}, 1); }) == ErrorCode::kEmpty);
  AdamWConfig bad;
  bad.beta1 = 1.0;
  CHECK(error_of([&] { fit_head(start(), samples(), 1, bad); }) == ErrorCode::kInvalidArgument);
  std::vector<TrainingSample> off = samples();
  off[0].teacher.confidence = 1.5f;
  CHECK(error_of([&] { fit_head(start(), off, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("trace smoothing windows") {
  const std::vector<double> trace{4, 2, 3, 1, 0};
  CHECK(head_mean(trace, 2) == 3.0);
  CHECK(tail_mean(trace, 2) == 0.5);
  CHECK(head_mean(trace, 10) == 2.0);
  CHECK(error_of([] { tail_mean(std::vector<double>{}, 3); }) == ErrorCode::kEmpty);
}
