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

#include "picoseg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "picoseg/error.hpp"

namespace picoseg {

namespace {

void check_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw Error(ErrorCode::kShape, "tensor extents must be >= 1, got " + s.str());
  }
}

struct ConvGeometry {
  int in_per_group;
  int out_per_group;
  int out_h;
  int out_w;
};

ConvGeometry validate_conv(const Tensor& input, const ConvParams& p) {
  const Shape& in = input.shape();
  const Shape& k = p.kernel.shape();
  if (p.groups < 1 || p.stride < 1 || p.dilation < 1 || p.padding < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "conv2d: stride/dilation/groups must be >= 1 and padding >= 0");
  }
  if (k.h != k.w) {
    throw Error(ErrorCode::kShape, "conv2d: kernel must be square, got " + k.str());
  }
  if (in.c % p.groups != 0 || k.n % p.groups != 0) {
    throw Error(ErrorCode::kShape, "conv2d: channels not divisible by groups (in_ch=" +
                                       std::to_string(in.c) + ", out_ch=" + std::to_string(k.n) +
                                       ", groups=" + std::to_string(p.groups) + ")");
  }
  if (k.c * p.groups != in.c) {
    throw Error(ErrorCode::kShape, "conv2d: in_ch mismatch: input has " + std::to_string(in.c) +
                                       " channels, kernel expects " +
                                       std::to_string(k.c * p.groups));
  }
  if (!p.bias.empty() && static_cast<int>(p.bias.size()) != k.n) {
    throw Error(ErrorCode::kShape, "conv2d: bias length " + std::to_string(p.bias.size()) +
                                       " != out_ch " + std::to_string(k.n));
  }
  ConvGeometry g{};
  g.in_per_group = k.c;
  g.out_per_group = k.n / p.groups;
  g.out_h = conv_output_extent(in.h, k.h, p.stride, p.padding, p.dilation);
  g.out_w = conv_output_extent(in.w, k.w, p.stride, p.padding, p.dilation);
  if (g.out_h < 1) {
    throw Error(ErrorCode::kShape, "conv2d: output height < 1 for input height " +
                                       std::to_string(in.h));
  }
  if (g.out_w < 1) {
    throw Error(ErrorCode::kShape, "conv2d: output width < 1 for input width " +
                                       std::to_string(in.w));
  }
  return g;
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) {
    throw Error(ErrorCode::kShape, std::string(op) + ": shape mismatch " + a.str() + " vs " +
                                       b.str());
  }
}

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  check_shape(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(shape), data_(std::move(values)) {
  check_shape(shape_);
  if (data_.size() != shape_.numel()) {
    throw Error(ErrorCode::kShape, "tensor data length " + std::to_string(data_.size()) +
                                       " does not match shape " + shape_.str());
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

int conv_output_extent(int in, int kernel, int stride, int padding, int dilation) {
  const int span = in + 2 * padding - dilation * (kernel - 1) - 1;
  if (span < 0) return 0;
  return span / stride + 1;
}

Tensor conv2d(const Tensor& input, const ConvParams& p) {
  const ConvGeometry g = validate_conv(input, p);
  const Shape& in = input.shape();
  const int ks = p.kernel.shape().h;
  Tensor out(Shape{in.n, p.kernel.shape().n, g.out_h, g.out_w});
  const float* kdata = p.kernel.data().data();

  for (int n = 0; n < in.n; ++n) {
    for (int grp = 0; grp < p.groups; ++grp) {
      for (int oc_local = 0; oc_local < g.out_per_group; ++oc_local) {
        const int oc = grp * g.out_per_group + oc_local;
        float* dst = out.plane(n, oc);
        for (int ky = 0; ky < ks; ++ky) {
          const int y_off = ky * p.dilation - p.padding;
          for (int kx = 0; kx < ks; ++kx) {
            const int x_off = kx * p.dilation - p.padding;
            // Valid output columns: 0 <= ox * stride + x_off < in.w.
            int ox_lo = 0;
            if (x_off < 0) ox_lo = (-x_off + p.stride - 1) / p.stride;
            int ox_hi = g.out_w;
            if (in.w - 1 - x_off < 0) {
              ox_hi = 0;
            } else {
              ox_hi = std::min(ox_hi, (in.w - 1 - x_off) / p.stride + 1);
            }
            if (ox_lo >= ox_hi) continue;
            for (int ci = 0; ci < g.in_per_group; ++ci) {
              const float wv =
                  kdata[((static_cast<std::size_t>(oc) * g.in_per_group + ci) * ks + ky) * ks + kx];
              const float* src = input.plane(n, grp * g.in_per_group + ci);
              for (int oy = 0; oy < g.out_h; ++oy) {
                const int iy = oy * p.stride + y_off;
                if (iy < 0 || iy >= in.h) continue;
                const float* row = src + static_cast<std::size_t>(iy) * in.w;
                float* drow = dst + static_cast<std::size_t>(oy) * g.out_w;
                if (p.stride == 1) {
                  const float* shifted = row + (ox_lo + x_off);
                  const int count = ox_hi - ox_lo;
                  float* d = drow + ox_lo;
                  for (int i = 0; i < count; ++i) d[i] += wv * shifted[i];
                } else {
                  for (int ox = ox_lo; ox < ox_hi; ++ox) {
                    drow[ox] += wv * row[ox * p.stride + x_off];
                  }
                }
              }
            }
          }
        }
        if (!p.bias.empty()) {
          const float b = p.bias[oc];
          const std::size_t count = static_cast<std::size_t>(g.out_h) * g.out_w;
          for (std::size_t i = 0; i < count; ++i) dst[i] = dst[i] + b;
        }
      }
    }
  }
  return out;
}

Tensor conv2d_naive(const Tensor& input, const ConvParams& p) {
  const ConvGeometry g = validate_conv(input, p);
  const Shape& in = input.shape();
  const int ks = p.kernel.shape().h;
  Tensor out(Shape{in.n, p.kernel.shape().n, g.out_h, g.out_w});

  for (int n = 0; n < in.n; ++n) {
    for (int oc = 0; oc < p.kernel.shape().n; ++oc) {
      const int grp = oc / g.out_per_group;
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          float acc = 0.0f;
          for (int ky = 0; ky < ks; ++ky) {
            for (int kx = 0; kx < ks; ++kx) {
              for (int ci = 0; ci < g.in_per_group; ++ci) {
                const int iy = oy * p.stride - p.padding + ky * p.dilation;
                const int ix = ox * p.stride - p.padding + kx * p.dilation;
                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                acc += p.kernel.at(oc, ci, ky, kx) * input.at(n, grp * g.in_per_group + ci, iy, ix);
              }
            }
          }
          out.at(n, oc, oy, ox) = p.bias.empty() ? acc : acc + p.bias[oc];
        }
      }
    }
  }
  return out;
}

Tensor upsample_nearest2x(const Tensor& input) {
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, s.c, s.h * 2, s.w * 2});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      const int ow = s.w * 2;
      for (int y = 0; y < s.h * 2; ++y) {
        const float* srow = src + static_cast<std::size_t>(y / 2) * s.w;
        float* drow = dst + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) drow[x] = srow[x / 2];
      }
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, s.c, 1, 1});
  const std::size_t count = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = input.plane(n, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < count; ++i) sum += src[i];
      out.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(count));
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  relu_inplace(out);
  return out;
}

void relu_inplace(Tensor& t) {
  for (float& v : t.data()) v = v > 0.0f ? v : 0.0f;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) v = 1.0f / (1.0f + std::exp(-v));
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw Error(ErrorCode::kShape,
                "concat_channels: N/H/W mismatch " + sa.str() + " vs " + sb.str());
  }
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = sa.plane();
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), plane * sa.c, out.plane(n, 0));
    std::copy_n(b.plane(n, 0), plane * sb.c, out.plane(n, sa.c));
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Tensor slice_batch(const Tensor& input, int n) {
  const Shape& s = input.shape();
  if (n < 0 || n >= s.n) {
    throw Error(ErrorCode::kShape, "slice_batch: index " + std::to_string(n) + " out of range");
  }
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  std::vector<float> values(input.data().begin() + static_cast<std::ptrdiff_t>(per * n),
                            input.data().begin() + static_cast<std::ptrdiff_t>(per * (n + 1)));
  return Tensor(Shape{1, s.c, s.h, s.w}, std::move(values));
}

}  // namespace picoseg
