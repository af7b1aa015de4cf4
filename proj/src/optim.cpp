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

#include "inucleus/optim.hpp"

#include <cmath>

namespace inucleus {

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in + fan_out == 0) throw Error("glorot init needs fan_in + fan_out > 0");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
Tensor<T> glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                         std::mt19937_64& rng) {
  const double a = glorot_bound(fan_in, fan_out);
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor<T> t(shape);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
double l2_penalty(const ParamStore<T>& params, const RegConfig& cfg) {
  if (cfg.lambda < 0.0) throw ConfigError("L2 lambda must be >= 0");
  double sum = 0.0;
  for (const Param<T>& p : params) {
    if (!cfg.applies_to.count(p.role)) continue;
    for (T w : p.value.values()) sum += static_cast<double>(w) * static_cast<double>(w);
  }
  return cfg.lambda * sum;
}

template <typename T>
double add_l2_grad(ParamStore<T>& params, const RegConfig& cfg) {
  const double penalty = l2_penalty(params, cfg);
  if (cfg.lambda == 0.0) return penalty;
  const double k = 2.0 * cfg.lambda;
  for (Param<T>& p : params) {
    if (!p.trainable || !cfg.applies_to.count(p.role)) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.grad[i] = static_cast<T>(p.grad[i] + k * p.value[i]);
    }
  }
  return penalty;
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& s) {
  if (s.m.empty()) {
    s.m.resize(params.size());
    s.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      s.m[i] = Tensor<T>(params[i].value.shape());
      s.v[i] = Tensor<T>(params[i].value.shape());
    }
  }
  if (s.m.size() != params.size()) {
    throw Error("Adam state tracks " + std::to_string(s.m.size()) + " parameters, store has " +
                std::to_string(params.size()));
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = params[i];
    if (!p.trainable) continue;
    T* w = p.value.data();
    const T* g = p.grad.data();
    T* m = s.m[i].data();
    T* v = s.v[i].data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<T>(s.beta1 * m[k] + (1.0 - s.beta1) * gk);
      v[k] = static_cast<T>(s.beta2 * v[k] + (1.0 - s.beta2) * gk * gk);
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] = static_cast<T>(w[k] - s.lr * mhat / (std::sqrt(vhat) + s.eps));
    }
  }
}

#define INUCLEUS_INSTANTIATE_OPTIM(T)                                                      \
  template Tensor<T> glorot_uniform(const Shape&, std::size_t, std::size_t,                \
                                    std::mt19937_64&);                                     \
  template double l2_penalty(const ParamStore<T>&, const RegConfig&);                      \
  template double add_l2_grad(ParamStore<T>&, const RegConfig&);                           \
  template void adam_step(ParamStore<T>&, AdamState<T>&);

INUCLEUS_INSTANTIATE_OPTIM(float)
INUCLEUS_INSTANTIATE_OPTIM(double)

#undef INUCLEUS_INSTANTIATE_OPTIM

}  // namespace inucleus
