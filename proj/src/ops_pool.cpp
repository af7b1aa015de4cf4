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

#include <string>

#include "inucleus/ops.hpp"

namespace inucleus {

template <typename T>
PoolResult<T> maxpool1d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride) {
  if (x.rank() != 2) {
    throw ShapeError("maxpool1d input must be (channels, length), got " + shape_string(x.shape()));
  }
  const std::size_t channels = x.dim(0), length = x.dim(1);
  const std::size_t out_len = pool_output_extent(length, kernel, stride);
  PoolResult<T> r{Tensor<T>({channels, out_len}), std::vector<std::uint32_t>(channels * out_len)};
  for (std::size_t c = 0; c < channels; ++c) {
    const T* row = x.data() + c * length;
    for (std::size_t j = 0; j < out_len; ++j) {
      std::size_t best = j * stride;
      for (std::size_t t = best + 1; t < j * stride + kernel; ++t) {
        if (row[t] > row[best]) best = t;
      }
      r.out[c * out_len + j] = row[best];
      r.argmax[c * out_len + j] = static_cast<std::uint32_t>(c * length + best);
    }
  }
  return r;
}

template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride) {
  if (x.rank() != 3) {
    throw ShapeError("maxpool2d input must be (channels, height, width), got " +
                     shape_string(x.shape()));
  }
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t oh = pool_output_extent(height, kernel, stride);
  const std::size_t ow = pool_output_extent(width, kernel, stride);
  PoolResult<T> r{Tensor<T>({channels, oh, ow}), std::vector<std::uint32_t>(channels * oh * ow)};
  for (std::size_t c = 0; c < channels; ++c) {
    const std::size_t plane = c * height * width;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        // Row-major scan of the window; strict '>' keeps the first maximum.
        std::size_t best = plane + i * stride * width + j * stride;
        for (std::size_t di = 0; di < kernel; ++di) {
          const std::size_t base = plane + (i * stride + di) * width + j * stride;
          for (std::size_t dj = 0; dj < kernel; ++dj) {
            if (x[base + dj] > x[best]) best = base + dj;
          }
        }
        const std::size_t o = (c * oh + i) * ow + j;
        r.out[o] = x[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                           const Tensor<T>& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("maxpool grad_out has " + std::to_string(grad_out.size()) +
                     " elements, expected " + std::to_string(argmax.size()));
  }
  Tensor<T> grad_x(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_x[argmax[i]] += grad_out[i];
  return grad_x;
}

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& a) {
  if (a.rank() < 2) {
    throw ShapeError("gap input must be (channels, ...), got " + shape_string(a.shape()));
  }
  const std::size_t channels = a.dim(0);
  const std::size_t inner = a.size() / channels;
  Tensor<T> out({channels});
  for (std::size_t c = 0; c < channels; ++c) {
    const T* p = a.data() + c * inner;
    double acc = 0.0;
    for (std::size_t i = 0; i < inner; ++i) acc += p[i];
    out[c] = static_cast<T>(acc / static_cast<double>(inner));
  }
  return out;
}

template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
  if (input_shape.size() < 2 || grad_out.shape() != Shape{input_shape[0]}) {
    throw ShapeError("gap grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match input " + shape_string(input_shape));
  }
  Tensor<T> grad_x(input_shape);
  const std::size_t channels = input_shape[0];
  const std::size_t inner = grad_x.size() / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    const T g = static_cast<T>(static_cast<double>(grad_out[c]) / static_cast<double>(inner));
    std::fill(grad_x.data() + c * inner, grad_x.data() + (c + 1) * inner, g);
  }
  return grad_x;
}

#define INUCLEUS_INSTANTIATE_POOL(T)                                                     \
  template PoolResult<T> maxpool1d_forward(const Tensor<T>&, std::size_t, std::size_t);  \
  template PoolResult<T> maxpool2d_forward(const Tensor<T>&, std::size_t, std::size_t);  \
  template Tensor<T> maxpool_backward(const Shape&, std::span<const std::uint32_t>,      \
                                      const Tensor<T>&);                                 \
  template Tensor<T> gap_forward(const Tensor<T>&);                                      \
  template Tensor<T> gap_backward(const Shape&, const Tensor<T>&);

INUCLEUS_INSTANTIATE_POOL(float)
INUCLEUS_INSTANTIATE_POOL(double)

#undef INUCLEUS_INSTANTIATE_POOL

}  // namespace inucleus
