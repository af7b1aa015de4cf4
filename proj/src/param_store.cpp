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

#include "inucleus/param_store.hpp"

#include <array>
#include <utility>

namespace inucleus {

namespace {

constexpr std::array<std::pair<ParamRole, std::string_view>, 6> kRoleNames{{
    {ParamRole::weight, "weight"},
    {ParamRole::bias, "bias"},
    {ParamRole::bn_gamma, "bn_gamma"},
    {ParamRole::bn_beta, "bn_beta"},
    {ParamRole::bn_running_mean, "bn_running_mean"},
    {ParamRole::bn_running_var, "bn_running_var"},
}};

}  // namespace

std::string_view to_string(ParamRole role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "unknown";
}

ParamRole param_role_from_string(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  throw Error("unknown parameter role '" + std::string(name) + "'");
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Tensor<T> value, bool trainable,
                               ParamRole role) {
  if (index_.count(name)) throw Error("duplicate parameter name '" + name + "'");
  Param<T> p;
  p.grad = Tensor<T>(value.shape());
  p.value = std::move(value);
  p.trainable = trainable;
  p.role = role;
  p.initialized =
      !(role == ParamRole::bn_running_mean || role == ParamRole::bn_running_var);
  p.name = std::move(name);
  index_.emplace(p.name, params_.size());
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("no parameter named '" + std::string(name) + "'");
  return it->second;
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

template <typename T>
void ParamStore<T>::set_value(std::string_view name, Tensor<T> value) {
  Param<T>& p = params_[index_of(name)];
  if (value.shape() != p.value.shape()) {
    throw ShapeError("parameter '" + p.name + "' has shape " + shape_string(p.value.shape()) +
                     ", got " + shape_string(value.shape()));
  }
  p.value = std::move(value);
  p.initialized = true;
}

template <typename T>
std::size_t ParamStore<T>::count(bool include_non_trainable) const {
  std::size_t n = 0;
  for (const Param<T>& p : params_) {
    if (p.trainable || include_non_trainable) n += p.value.size();
  }
  return n;
}

template <typename T>
void ParamStore<T>::zero_grads() {
  for (Param<T>& p : params_) {
    if (p.trainable) p.grad.fill(T(0));
  }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace inucleus
