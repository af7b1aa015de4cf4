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

#include <cmath>
#include <string>

#include "inucleus/ops.hpp"

namespace inucleus {

namespace {

template <typename T>
void check_batch(std::span<const Tensor<T>> batch, const BatchNormState<T>& s) {
  if (batch.empty()) throw ShapeError("batchnorm needs a non-empty batch");
  const Shape& ref = batch[0].shape();
  if (ref.size() < 2) {
    throw ShapeError("batchnorm items must be (channels, ...), got " + shape_string(ref));
  }
  for (std::size_t i = 1; i < batch.size(); ++i) {
    if (batch[i].shape() != ref) {
      throw ShapeError("batchnorm item " + std::to_string(i) + " has shape " +
                       shape_string(batch[i].shape()) + ", expected " + shape_string(ref));
    }
  }
  const Shape channels{ref[0]};
  for (const Tensor<T>* t : {&s.gamma, &s.beta, &s.running_mean, &s.running_var}) {
    if (t->shape() != channels) {
      throw ShapeError("batchnorm parameter shape " + shape_string(t->shape()) +
                       " does not match " + std::to_string(ref[0]) + " channels");
    }
  }
}

}  // namespace

template <typename T>
BatchNormForward<T> batchnorm_forward(std::span<const Tensor<T>> batch,
                                      const BatchNormState<T>& s) {
  check_batch(batch, s);
  const std::size_t channels = batch[0].dim(0);
  const std::size_t inner = batch[0].size() / channels;
  const double count = static_cast<double>(inner * batch.size());

  BatchNormForward<T> r;
  r.mean = Tensor<T>({channels});
  r.var = Tensor<T>({channels});
  r.running_mean = s.running_mean;
  r.running_var = s.running_var;

  if (s.mode == BnMode::train) {
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (const Tensor<T>& x : batch) {
        const T* p = x.data() + c * inner;
        for (std::size_t i = 0; i < inner; ++i) sum += p[i];
      }
      const double mean = sum / count;
      double sq = 0.0;
      for (const Tensor<T>& x : batch) {
        const T* p = x.data() + c * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / count;
      const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
      r.mean[c] = static_cast<T>(mean);
      r.var[c] = static_cast<T>(var);
      r.running_mean[c] =
          static_cast<T>(s.momentum * s.running_mean[c] + (1.0 - s.momentum) * mean);
      r.running_var[c] =
          static_cast<T>(s.momentum * s.running_var[c] + (1.0 - s.momentum) * unbiased);
    }
  } else {
    if (!s.stats_initialized) {
      throw Error("batchnorm: uninitialized running statistics in inference mode");
    }
    r.mean = s.running_mean;
    r.var = s.running_var;
  }

  r.out.reserve(batch.size());
  for (const Tensor<T>& x : batch) {
    Tensor<T> y(x.shape());
    for (std::size_t c = 0; c < channels; ++c) {
      const double inv_std = 1.0 / std::sqrt(static_cast<double>(r.var[c]) + s.epsilon);
      const double scale = s.gamma[c] * inv_std;
      const double shift = s.beta[c] - scale * r.mean[c];
      const T* p = x.data() + c * inner;
      T* q = y.data() + c * inner;
      for (std::size_t i = 0; i < inner; ++i) q[i] = static_cast<T>(scale * p[i] + shift);
    }
    r.out.push_back(std::move(y));
  }
  return r;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(std::span<const Tensor<T>> batch,
                                     const BatchNormState<T>& s, const Tensor<T>& mean,
                                     const Tensor<T>& var, std::span<const Tensor<T>> grad_out,
                                     bool want_grad_x) {
  check_batch(batch, s);
  if (grad_out.size() != batch.size()) {
    throw ShapeError("batchnorm grad_out batch size " + std::to_string(grad_out.size()) +
                     " does not match " + std::to_string(batch.size()));
  }
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (grad_out[n].shape() != batch[n].shape()) {
      throw ShapeError("batchnorm grad_out item " + std::to_string(n) + " has shape " +
                       shape_string(grad_out[n].shape()));
    }
  }
  const std::size_t channels = batch[0].dim(0);
  const std::size_t inner = batch[0].size() / channels;
  const double count = static_cast<double>(inner * batch.size());

  BatchNormGrads<T> r;
  r.grad_gamma = Tensor<T>({channels});
  r.grad_beta = Tensor<T>({channels});
  if (want_grad_x) {
    r.grad_x.reserve(batch.size());
    for (const Tensor<T>& x : batch) r.grad_x.emplace_back(x.shape());
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double mu = mean[c];
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(var[c]) + s.epsilon);
    double dgamma = 0.0, dbeta = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
      const T* x = batch[n].data() + c * inner;
      const T* g = grad_out[n].data() + c * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        dgamma += g[i] * (x[i] - mu) * inv_std;
        dbeta += g[i];
      }
    }
    r.grad_gamma[c] = static_cast<T>(dgamma);
    r.grad_beta[c] = static_cast<T>(dbeta);
    if (!want_grad_x) continue;
    const double scale = s.gamma[c] * inv_std;
    for (std::size_t n = 0; n < batch.size(); ++n) {
      const T* x = batch[n].data() + c * inner;
      const T* g = grad_out[n].data() + c * inner;
      T* dx = r.grad_x[n].data() + c * inner;
      if (s.mode == BnMode::train) {
        for (std::size_t i = 0; i < inner; ++i) {
          const double xhat = (x[i] - mu) * inv_std;
          dx[i] = static_cast<T>(scale * (g[i] - dbeta / count - xhat * dgamma / count));
        }
      } else {
        for (std::size_t i = 0; i < inner; ++i) dx[i] = static_cast<T>(scale * g[i]);
      }
    }
  }
  return r;
}

#define INUCLEUS_INSTANTIATE_BN(T)                                                          \
  template BatchNormForward<T> batchnorm_forward(std::span<const Tensor<T>>,                \
                                                 const BatchNormState<T>&);                 \
  template BatchNormGrads<T> batchnorm_backward(std::span<const Tensor<T>>,                 \
                                                const BatchNormState<T>&, const Tensor<T>&, \
                                                const Tensor<T>&, std::span<const Tensor<T>>, \
                                                bool);

INUCLEUS_INSTANTIATE_BN(float)
INUCLEUS_INSTANTIATE_BN(double)

#undef INUCLEUS_INSTANTIATE_BN

}  // namespace inucleus
