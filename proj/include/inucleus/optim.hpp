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

#ifndef INUCLEUS_OPTIM_HPP
#define INUCLEUS_OPTIM_HPP

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "inucleus/param_store.hpp"

namespace inucleus {

/// Half-width of the Glorot uniform interval, sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

template <typename T>
Tensor<T> glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                         std::mt19937_64& rng);

struct RegConfig {
  double lambda = 1e-4;
  /// Conv kernels only by default; biases and BN affine terms are not penalized.
  std::set<ParamRole> applies_to{ParamRole::weight};
};

/// lambda * sum(w^2) over the parameters selected by `cfg`.
template <typename T>
double l2_penalty(const ParamStore<T>& params, const RegConfig& cfg);

/// Adds 2 * lambda * w to the selected gradients and returns the penalty.
template <typename T>
double add_l2_grad(ParamStore<T>& params, const RegConfig& cfg);

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Moments indexed like the ParamStore; empty for non-trainable entries.
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

/**
 * One bias-corrected Adam update of every trainable parameter:
 *   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2,
 *   w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
 * Moments are allocated on the first call.
 */
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state);

}  // namespace inucleus

#endif  // INUCLEUS_OPTIM_HPP
