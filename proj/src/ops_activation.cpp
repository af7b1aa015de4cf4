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

#include <algorithm>
#include <cmath>
#include <string>

#include "inucleus/ops.hpp"

namespace inucleus {

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.values()) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw ShapeError("relu grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match input " + shape_string(x.shape()));
  }
  Tensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 1) {
    throw ShapeError("softmax expects a vector of logits, got " + shape_string(logits.shape()));
  }
  T mx = logits[0];
  for (T v : logits.values()) mx = v > mx ? v : mx;
  Tensor<T> p(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(static_cast<double>(logits[i]) - static_cast<double>(mx));
    p[i] = static_cast<T>(e);
    total += e;
  }
  for (T& v : p.values()) v = static_cast<T>(static_cast<double>(v) / total);
  return p;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_probs) {
  if (probs.shape() != grad_probs.shape()) {
    throw ShapeError("softmax grad shape " + shape_string(grad_probs.shape()) +
                     " does not match " + shape_string(probs.shape()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    dot += static_cast<double>(probs[i]) * static_cast<double>(grad_probs[i]);
  }
  Tensor<T> g(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    g[i] = static_cast<T>(static_cast<double>(probs[i]) *
                          (static_cast<double>(grad_probs[i]) - dot));
  }
  return g;
}

template <typename T>
XentResult<T> softmax_xent(const Tensor<T>& logits, std::size_t label) {
  if (logits.rank() != 1) {
    throw ShapeError("softmax_xent expects a vector of logits, got " +
                     shape_string(logits.shape()));
  }
  if (label >= logits.size()) {
    throw ShapeError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  double mx = logits[0];
  for (T v : logits.values()) mx = std::max(mx, static_cast<double>(v));
  double total = 0.0;
  for (T v : logits.values()) total += std::exp(static_cast<double>(v) - mx);
  const double log_z = mx + std::log(total);

  XentResult<T> r;
  r.loss = log_z - static_cast<double>(logits[label]);
  r.grad_logits = Tensor<T>(logits.shape());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.grad_logits[i] = static_cast<T>(std::exp(static_cast<double>(logits[i]) - log_z) -
                                      (i == label ? 1.0 : 0.0));
  }
  return r;
}

#define INUCLEUS_INSTANTIATE_ACT(T)                                         \
  template Tensor<T> relu_forward(const Tensor<T>&);                        \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> softmax(const Tensor<T>&);                             \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);  \
  template XentResult<T> softmax_xent(const Tensor<T>&, std::size_t);

INUCLEUS_INSTANTIATE_ACT(float)
INUCLEUS_INSTANTIATE_ACT(double)

#undef INUCLEUS_INSTANTIATE_ACT

}  // namespace inucleus
