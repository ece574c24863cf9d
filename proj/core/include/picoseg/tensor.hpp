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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace picoseg {

/// Extents of a dense NCHW tensor. All extents are >= 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense float32 tensor, row-major NCHW.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  // Pointer to the start of the (n, c) spatial plane.
  float* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const float* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  bool all_finite() const;
  bool operator==(const Tensor&) const = default;

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_;
  std::vector<float> data_;
};

/// Convolution weights. The kernel is (out_ch, in_ch / groups, k, k).
struct ConvParams {
  Tensor kernel;
  std::vector<float> bias;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;

  int out_channels() const { return kernel.shape().n; }
  int kernel_size() const { return kernel.shape().h; }
};

/// Output extent of one spatial axis; may be <= 0 for invalid geometry.
int conv_output_extent(int in, int kernel, int stride, int padding, int dilation);

// Both conv paths accumulate every output element in float, ky -> kx -> ci,
// starting from zero, and add the bias last. They must stay bit-identical.
Tensor conv2d(const Tensor& input, const ConvParams& params);
Tensor conv2d_naive(const Tensor& input, const ConvParams& params);

Tensor upsample_nearest2x(const Tensor& input);
Tensor global_avg_pool(const Tensor& input);
Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);

void relu_inplace(Tensor& t);

/// Extracts sample `n` as a (1, C, H, W) tensor.
Tensor slice_batch(const Tensor& input, int n);

}  // namespace picoseg
