/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Convolutions are lowered to im2col + GEMM. The column buffer is built in
// chunks of output positions so that workspace stays bounded for the large
// (192 x 1991) images of the 2D stage.

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <string>

#include "inucleus/ops.hpp"

namespace inucleus {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Column-buffer budget in elements (per chunk).
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

template <typename T>
std::vector<T>& workspace(int slot) {
  thread_local std::vector<T> buffers[2];
  return buffers[slot];
}

// Output indices j in [0, n) whose input coordinate (j0 + j) * stride + offset
// falls inside [0, extent).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_span(std::size_t j0, std::size_t n, std::size_t stride, std::ptrdiff_t offset,
                std::size_t extent) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto first = static_cast<std::ptrdiff_t>(j0);
  // smallest j with (first + j) * s + offset >= 0
  std::ptrdiff_t lo = 0;
  if (first * s + offset < 0) lo = (-offset - first * s + s - 1) / s;
  // smallest j with (first + j) * s + offset >= extent
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n);
  const auto e = static_cast<std::ptrdiff_t>(extent);
  if ((first + hi - 1) * s + offset >= e) {
    hi = (e - offset - first * s + s - 1) / s;
    if (hi < 0) hi = 0;
  }
  lo = std::min<std::ptrdiff_t>(lo, static_cast<std::ptrdiff_t>(n));
  hi = std::max(hi, lo);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

struct Geometry1D {
  std::size_t in_ch, length, out_ch, kernel, stride, out_len;
  std::ptrdiff_t pad;
};

template <typename T>
Geometry1D geometry1d(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                      Padding padding) {
  if (x.rank() != 2) {
    throw ShapeError("conv1d input must be (channels, length), got " + shape_string(x.shape()));
  }
  if (w.rank() != 3) {
    throw ShapeError("conv1d weights must be (out, in, kernel), got " + shape_string(w.shape()));
  }
  if (stride == 0) throw ShapeError("conv1d stride must be >= 1");
  if (w.dim(1) != x.dim(0)) {
    throw ShapeError("conv1d channel mismatch: input has " + std::to_string(x.dim(0)) +
                     " channels, weights expect " + std::to_string(w.dim(1)));
  }
  Geometry1D g{};
  g.in_ch = x.dim(0);
  g.length = x.dim(1);
  g.out_ch = w.dim(0);
  g.kernel = w.dim(2);
  g.stride = stride;
  g.out_len = conv_output_extent(g.length, g.kernel, stride, padding);
  g.pad = padding == Padding::same
              ? static_cast<std::ptrdiff_t>(same_padding_before(g.length, g.kernel, stride))
              : 0;
  return g;
}

template <typename T>
void check_bias(const Tensor<T>& b, std::size_t out_ch) {
  if (b.shape() != Shape{out_ch}) {
    throw ShapeError("bias shape " + shape_string(b.shape()) + " does not match " +
                     std::to_string(out_ch) + " output channels");
  }
}

template <typename T>
void im2col_1d(const T* x, const Geometry1D& g, std::size_t j0, std::size_t n, T* col) {
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    const T* src = x + c * g.length;
    for (std::size_t t = 0; t < g.kernel; ++t) {
      T* dst = col + (c * g.kernel + t) * n;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(t) - g.pad;
      const Span v = valid_span(j0, n, g.stride, off, g.length);
      std::fill(dst, dst + v.lo, T(0));
      for (std::size_t j = v.lo; j < v.hi; ++j) {
        dst[j] = src[static_cast<std::ptrdiff_t>((j0 + j) * g.stride) + off];
      }
      std::fill(dst + v.hi, dst + n, T(0));
    }
  }
}

template <typename T>
void col2im_1d(const T* col, const Geometry1D& g, std::size_t j0, std::size_t n, T* x) {
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    T* dst = x + c * g.length;
    for (std::size_t t = 0; t < g.kernel; ++t) {
      const T* src = col + (c * g.kernel + t) * n;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(t) - g.pad;
      const Span v = valid_span(j0, n, g.stride, off, g.length);
      for (std::size_t j = v.lo; j < v.hi; ++j) {
        dst[static_cast<std::ptrdiff_t>((j0 + j) * g.stride) + off] += src[j];
      }
    }
  }
}

struct Geometry2D {
  std::size_t in_ch, height, width, out_ch, kh, kw, stride, out_h, out_w;
  std::ptrdiff_t pad_top, pad_left;
};

template <typename T>
Geometry2D geometry2d(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                      Padding padding) {
  if (x.rank() != 3) {
    throw ShapeError("conv2d input must be (channels, height, width), got " +
                     shape_string(x.shape()));
  }
  if (w.rank() != 4) {
    throw ShapeError("conv2d weights must be (out, in, kh, kw), got " + shape_string(w.shape()));
  }
  if (stride == 0) throw ShapeError("conv2d stride must be >= 1");
  if (w.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(x.dim(0)) +
                     " channels, weights expect " + std::to_string(w.dim(1)));
  }
  Geometry2D g{};
  g.in_ch = x.dim(0);
  g.height = x.dim(1);
  g.width = x.dim(2);
  g.out_ch = w.dim(0);
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.stride = stride;
  g.out_h = conv_output_extent(g.height, g.kh, stride, padding);
  g.out_w = conv_output_extent(g.width, g.kw, stride, padding);
  if (padding == Padding::same) {
    g.pad_top = static_cast<std::ptrdiff_t>(same_padding_before(g.height, g.kh, stride));
    g.pad_left = static_cast<std::ptrdiff_t>(same_padding_before(g.width, g.kw, stride));
  }
  return g;
}

// Columns cover output rows [r0, r0 + nr); column index = (row - r0) * out_w + q.
template <typename T>
void im2col_2d(const T* x, const Geometry2D& g, std::size_t r0, std::size_t nr, T* col) {
  const std::size_t n = nr * g.out_w;
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      const std::ptrdiff_t yoff = static_cast<std::ptrdiff_t>(ki) - g.pad_top;
      const Span rows = valid_span(r0, nr, g.stride, yoff, g.height);
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* dst = col + ((c * g.kh + ki) * g.kw + kj) * n;
        const std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(kj) - g.pad_left;
        const Span cols = valid_span(0, g.out_w, g.stride, xoff, g.width);
        std::fill(dst, dst + rows.lo * g.out_w, T(0));
        for (std::size_t rr = rows.lo; rr < rows.hi; ++rr) {
          const auto iy = static_cast<std::size_t>(static_cast<std::ptrdiff_t>((r0 + rr) * g.stride) + yoff);
          const T* src = x + (c * g.height + iy) * g.width;
          T* out = dst + rr * g.out_w;
          std::fill(out, out + cols.lo, T(0));
          for (std::size_t q = cols.lo; q < cols.hi; ++q) {
            out[q] = src[static_cast<std::ptrdiff_t>(q * g.stride) + xoff];
          }
          std::fill(out + cols.hi, out + g.out_w, T(0));
        }
        std::fill(dst + rows.hi * g.out_w, dst + n, T(0));
      }
    }
  }
}

template <typename T>
void col2im_2d(const T* col, const Geometry2D& g, std::size_t r0, std::size_t nr, T* x) {
  const std::size_t n = nr * g.out_w;
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      const std::ptrdiff_t yoff = static_cast<std::ptrdiff_t>(ki) - g.pad_top;
      const Span rows = valid_span(r0, nr, g.stride, yoff, g.height);
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* src = col + ((c * g.kh + ki) * g.kw + kj) * n;
        const std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(kj) - g.pad_left;
        const Span cols = valid_span(0, g.out_w, g.stride, xoff, g.width);
        for (std::size_t rr = rows.lo; rr < rows.hi; ++rr) {
          const auto iy = static_cast<std::size_t>(static_cast<std::ptrdiff_t>((r0 + rr) * g.stride) + yoff);
          T* dst = x + (c * g.height + iy) * g.width;
          const T* in = src + rr * g.out_w;
          for (std::size_t q = cols.lo; q < cols.hi; ++q) {
            dst[static_cast<std::ptrdiff_t>(q * g.stride) + xoff] += in[q];
          }
        }
      }
    }
  }
}

template <typename T>
void add_bias(Tensor<T>& out, const Tensor<T>& bias) {
  const std::size_t channels = out.dim(0);
  const std::size_t inner = out.size() / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    T* row = out.data() + c * inner;
    const T b = bias[c];
    for (std::size_t j = 0; j < inner; ++j) row[j] += b;
  }
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& grad_out, Tensor<T>& grad_b) {
  const std::size_t channels = grad_out.dim(0);
  const std::size_t inner = grad_out.size() / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* row = grad_out.data() + c * inner;
    T acc = 0;
    for (std::size_t j = 0; j < inner; ++j) acc += row[j];
    grad_b[c] += acc;
  }
}

template <typename T>
void check_grad_buffers(const Tensor<T>& w, const Tensor<T>& grad_w, const Tensor<T>& grad_b) {
  if (grad_w.shape() != w.shape()) {
    throw ShapeError("weight gradient shape " + shape_string(grad_w.shape()) +
                     " does not match weights " + shape_string(w.shape()));
  }
  check_bias(grad_b, w.dim(0));
}

}  // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               Padding padding) {
  if (kernel == 0 || stride == 0) throw ShapeError("kernel and stride must be >= 1");
  if (padding == Padding::same) return (input + stride - 1) / stride;
  if (input < kernel) {
    throw ShapeError("output length < 1: input extent " + std::to_string(input) +
                     " is shorter than kernel " + std::to_string(kernel));
  }
  return (input - kernel) / stride + 1;
}

std::size_t same_padding_before(std::size_t input, std::size_t kernel, std::size_t stride) {
  const std::size_t out = (input + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t total = needed > input ? needed - input : 0;
  return total - total / 2;
}

std::size_t pool_output_extent(std::size_t input, std::size_t kernel, std::size_t stride) {
  return conv_output_extent(input, kernel, stride, Padding::valid);
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, Padding padding) {
  const Geometry1D g = geometry1d(x, weights, stride, padding);
  check_bias(bias, g.out_ch);
  Tensor<T> out({g.out_ch, g.out_len});
  const std::size_t rows = g.in_ch * g.kernel;
  const std::size_t chunk = std::clamp<std::size_t>(kColumnBudget / rows, 1, g.out_len);
  std::vector<T>& col = workspace<T>(0);
  ConstMap<T> w(weights.data(), g.out_ch, rows);
  for (std::size_t j0 = 0; j0 < g.out_len; j0 += chunk) {
    const std::size_t n = std::min(chunk, g.out_len - j0);
    col.resize(rows * n);
    im2col_1d(x.data(), g, j0, n, col.data());
    StridedMap<T> o(out.data() + j0, g.out_ch, n, Eigen::OuterStride<>(g.out_len));
    o.noalias() = w * ConstMap<T>(col.data(), rows, n);
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
Tensor<T> conv1d_backward_accumulate(const Tensor<T>& x, const Tensor<T>& weights,
                                     std::size_t stride, Padding padding,
                                     const Tensor<T>& grad_out, Tensor<T>& grad_w,
                                     Tensor<T>& grad_b, bool want_grad_x) {
  const Geometry1D g = geometry1d(x, weights, stride, padding);
  if (grad_out.shape() != Shape{g.out_ch, g.out_len}) {
    throw ShapeError("conv1d grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match output " + shape_string({g.out_ch, g.out_len}));
  }
  check_grad_buffers(weights, grad_w, grad_b);
  accumulate_bias_grad(grad_out, grad_b);

  Tensor<T> grad_x;
  if (want_grad_x) grad_x = Tensor<T>(x.shape());
  const std::size_t rows = g.in_ch * g.kernel;
  const std::size_t chunk = std::clamp<std::size_t>(kColumnBudget / rows, 1, g.out_len);
  std::vector<T>& col = workspace<T>(0);
  std::vector<T>& gcol = workspace<T>(1);
  ConstMap<T> w(weights.data(), g.out_ch, rows);
  Map<T> gw(grad_w.data(), g.out_ch, rows);
  for (std::size_t j0 = 0; j0 < g.out_len; j0 += chunk) {
    const std::size_t n = std::min(chunk, g.out_len - j0);
    col.resize(rows * n);
    im2col_1d(x.data(), g, j0, n, col.data());
    ConstStridedMap<T> go(grad_out.data() + j0, g.out_ch, n, Eigen::OuterStride<>(g.out_len));
    gw.noalias() += go * ConstMap<T>(col.data(), rows, n).transpose();
    if (want_grad_x) {
      gcol.resize(rows * n);
      Map<T>(gcol.data(), rows, n).noalias() = w.transpose() * go;
      col2im_1d(gcol.data(), g, j0, n, grad_x.data());
    }
  }
  return grad_x;
}

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& x, const Conv1DParams<T>& p,
                             const Tensor<T>& grad_out) {
  ConvGrads<T> g;
  g.grad_w = Tensor<T>(p.weights.shape());
  g.grad_b = Tensor<T>(p.bias.shape());
  g.grad_x = conv1d_backward_accumulate(x, p.weights, p.stride, p.padding, grad_out, g.grad_w,
                                        g.grad_b, true);
  return g;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, Padding padding) {
  const Geometry2D g = geometry2d(x, weights, stride, padding);
  check_bias(bias, g.out_ch);
  Tensor<T> out({g.out_ch, g.out_h, g.out_w});
  const std::size_t rows = g.in_ch * g.kh * g.kw;
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t chunk_rows =
      std::clamp<std::size_t>(kColumnBudget / (rows * g.out_w), 1, g.out_h);
  std::vector<T>& col = workspace<T>(0);
  ConstMap<T> w(weights.data(), g.out_ch, rows);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk_rows) {
    const std::size_t nr = std::min(chunk_rows, g.out_h - r0);
    const std::size_t n = nr * g.out_w;
    col.resize(rows * n);
    im2col_2d(x.data(), g, r0, nr, col.data());
    StridedMap<T> o(out.data() + r0 * g.out_w, g.out_ch, n, Eigen::OuterStride<>(out_plane));
    o.noalias() = w * ConstMap<T>(col.data(), rows, n);
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
Tensor<T> conv2d_backward_accumulate(const Tensor<T>& x, const Tensor<T>& weights,
                                     std::size_t stride, Padding padding,
                                     const Tensor<T>& grad_out, Tensor<T>& grad_w,
                                     Tensor<T>& grad_b, bool want_grad_x) {
  const Geometry2D g = geometry2d(x, weights, stride, padding);
  if (grad_out.shape() != Shape{g.out_ch, g.out_h, g.out_w}) {
    throw ShapeError("conv2d grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match output " + shape_string({g.out_ch, g.out_h, g.out_w}));
  }
  check_grad_buffers(weights, grad_w, grad_b);
  accumulate_bias_grad(grad_out, grad_b);

  Tensor<T> grad_x;
  if (want_grad_x) grad_x = Tensor<T>(x.shape());
  const std::size_t rows = g.in_ch * g.kh * g.kw;
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t chunk_rows =
      std::clamp<std::size_t>(kColumnBudget / (rows * g.out_w), 1, g.out_h);
  std::vector<T>& col = workspace<T>(0);
  std::vector<T>& gcol = workspace<T>(1);
  ConstMap<T> w(weights.data(), g.out_ch, rows);
  Map<T> gw(grad_w.data(), g.out_ch, rows);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk_rows) {
    const std::size_t nr = std::min(chunk_rows, g.out_h - r0);
    const std::size_t n = nr * g.out_w;
    col.resize(rows * n);
    im2col_2d(x.data(), g, r0, nr, col.data());
    ConstStridedMap<T> go(grad_out.data() + r0 * g.out_w, g.out_ch, n,
                          Eigen::OuterStride<>(out_plane));
    gw.noalias() += go * ConstMap<T>(col.data(), rows, n).transpose();
    if (want_grad_x) {
      gcol.resize(rows * n);
      Map<T>(gcol.data(), rows, n).noalias() = w.transpose() * go;
      col2im_2d(gcol.data(), g, r0, nr, grad_x.data());
    }
  }
  return grad_x;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Conv2DParams<T>& p,
                             const Tensor<T>& grad_out) {
  ConvGrads<T> g;
  g.grad_w = Tensor<T>(p.weights.shape());
  g.grad_b = Tensor<T>(p.bias.shape());
  g.grad_x = conv2d_backward_accumulate(x, p.weights, p.stride, p.padding, grad_out, g.grad_w,
                                        g.grad_b, true);
  return g;
}

#define INUCLEUS_INSTANTIATE_CONV(T)                                                          \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                    std::size_t, Padding);                                    \
  template Tensor<T> conv1d_backward_accumulate(const Tensor<T>&, const Tensor<T>&,           \
                                                std::size_t, Padding, const Tensor<T>&,       \
                                                Tensor<T>&, Tensor<T>&, bool);                \
  template ConvGrads<T> conv1d_backward(const Tensor<T>&, const Conv1DParams<T>&,             \
                                        const Tensor<T>&);                                    \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                    std::size_t, Padding);                                    \
  template Tensor<T> conv2d_backward_accumulate(const Tensor<T>&, const Tensor<T>&,           \
                                                std::size_t, Padding, const Tensor<T>&,       \
                                                Tensor<T>&, Tensor<T>&, bool);                \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Conv2DParams<T>&,             \
                                        const Tensor<T>&);

INUCLEUS_INSTANTIATE_CONV(float)
INUCLEUS_INSTANTIATE_CONV(double)

#undef INUCLEUS_INSTANTIATE_CONV

}  // namespace inucleus
