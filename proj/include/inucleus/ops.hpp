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

// Forward and backward kernels for the layer primitives. Every function is
// pure: inputs are never mutated, results are returned by value. Kernels that
// accumulate into caller-owned gradients carry an `_accumulate` suffix.

#ifndef INUCLEUS_OPS_HPP
#define INUCLEUS_OPS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "inucleus/tensor.hpp"

namespace inucleus {

enum class Padding { same, valid };

/// Output extent of a convolution along one axis; throws if it would be < 1.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               Padding padding);

/// Zeros inserted before the first input element for SAME padding. The total
/// deficit is split symmetrically; an odd leftover goes to the left side.
std::size_t same_padding_before(std::size_t input, std::size_t kernel, std::size_t stride);

/// Output extent of a VALID pooling window; throws if it would be < 1.
std::size_t pool_output_extent(std::size_t input, std::size_t kernel, std::size_t stride);

template <typename T>
struct Conv1DParams {
  Tensor<T> weights;  // (out_channels, in_channels, kernel)
  Tensor<T> bias;     // (out_channels)
  std::size_t stride = 1;
  Padding padding = Padding::same;
};

template <typename T>
struct Conv2DParams {
  Tensor<T> weights;  // (out_channels, in_channels, kh, kw)
  Tensor<T> bias;     // (out_channels)
  std::size_t stride = 1;
  Padding padding = Padding::same;
};

template <typename T>
struct ConvGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_w;
  Tensor<T> grad_b;
};

// conv1d: x is (in_channels, length).
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, Padding padding);
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Conv1DParams<T>& p) {
  return conv1d_forward(x, p.weights, p.bias, p.stride, p.padding);
}

/// Adds dL/dw and dL/db into grad_w / grad_b; returns dL/dx when `want_grad_x`.
template <typename T>
Tensor<T> conv1d_backward_accumulate(const Tensor<T>& x, const Tensor<T>& weights,
                                     std::size_t stride, Padding padding,
                                     const Tensor<T>& grad_out, Tensor<T>& grad_w,
                                     Tensor<T>& grad_b, bool want_grad_x);

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& x, const Conv1DParams<T>& p,
                             const Tensor<T>& grad_out);

// conv2d: x is (in_channels, height, width), square stride.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, Padding padding);
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Conv2DParams<T>& p) {
  return conv2d_forward(x, p.weights, p.bias, p.stride, p.padding);
}

template <typename T>
Tensor<T> conv2d_backward_accumulate(const Tensor<T>& x, const Tensor<T>& weights,
                                     std::size_t stride, Padding padding,
                                     const Tensor<T>& grad_out, Tensor<T>& grad_w,
                                     Tensor<T>& grad_b, bool want_grad_x);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Conv2DParams<T>& p,
                             const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

/// Gradient passes where x > 0; the derivative at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

/// Max-pooling result: `argmax[i]` is the flat input offset that produced output i.
template <typename T>
struct PoolResult {
  Tensor<T> out;
  std::vector<std::uint32_t> argmax;
};

// maxpool1d: x is (channels, length); VALID windows.
template <typename T>
PoolResult<T> maxpool1d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride);

// maxpool2d: x is (channels, height, width); square window and stride, VALID.
template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride);

/// Routes each output gradient to its window's (first) maximum.
template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                           const Tensor<T>& grad_out);

/// Per-channel mean over every non-channel axis: (c, ...) -> (c).
template <typename T>
Tensor<T> gap_forward(const Tensor<T>& a);

template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out);

enum class BnMode { train, infer };

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;
  BnMode mode = BnMode::train;
  /// False until a training update or an explicit assignment of the stats.
  bool stats_initialized = false;
};

template <typename T>
struct BatchNormForward {
  std::vector<Tensor<T>> out;
  /// Statistics used for normalization (batch stats in train mode, running stats otherwise).
  Tensor<T> mean;
  Tensor<T> var;
  /// Updated running statistics (train mode); copies of the inputs in infer mode.
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

template <typename T>
struct BatchNormGrads {
  std::vector<Tensor<T>> grad_x;
  Tensor<T> grad_gamma;
  Tensor<T> grad_beta;
};

/**
 * Spatial batch normalization over a batch of (channels, ...) tensors.
 * Train mode normalizes each channel over batch and spatial positions and
 * returns exponentially averaged running statistics (the unbiased batch
 * variance feeds the running variance). Infer mode normalizes with the
 * running statistics and throws if they were never initialized.
 */
template <typename T>
BatchNormForward<T> batchnorm_forward(std::span<const Tensor<T>> batch,
                                      const BatchNormState<T>& state);

/// `mean`/`var` are the statistics returned by the matching forward call.
template <typename T>
BatchNormGrads<T> batchnorm_backward(std::span<const Tensor<T>> batch,
                                     const BatchNormState<T>& state, const Tensor<T>& mean,
                                     const Tensor<T>& var, std::span<const Tensor<T>> grad_out,
                                     bool want_grad_x = true);

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Vector-Jacobian product of softmax, given its output.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_probs);

template <typename T>
struct XentResult {
  double loss = 0.0;
  Tensor<T> grad_logits;
};

/// -log softmax(logits)[label] and its gradient softmax(logits) - onehot(label).
template <typename T>
XentResult<T> softmax_xent(const Tensor<T>& logits, std::size_t label);

}  // namespace inucleus

#endif  // INUCLEUS_OPS_HPP
