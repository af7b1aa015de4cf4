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

#ifndef INUCLEUS_PARAM_STORE_HPP
#define INUCLEUS_PARAM_STORE_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inucleus/tensor.hpp"

namespace inucleus {

enum class ParamRole { weight, bias, bn_gamma, bn_beta, bn_running_mean, bn_running_var };

std::string_view to_string(ParamRole role);
ParamRole param_role_from_string(std::string_view name);

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
  ParamRole role = ParamRole::weight;
  /// Running statistics start uninitialized; everything else is ready at build.
  bool initialized = true;
};

/**
 * Named parameters in definition order. Layers refer to entries by index, so
 * entries are never removed or reordered once added.
 */
template <typename T>
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor<T> value, bool trainable, ParamRole role);

  std::size_t size() const noexcept { return params_.size(); }
  Param<T>& operator[](std::size_t i) { return params_[i]; }
  const Param<T>& operator[](std::size_t i) const { return params_[i]; }

  /// Index of `name`; throws if absent.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;
  const Param<T>& get(std::string_view name) const { return params_[index_of(name)]; }

  /// Replaces a value (shape must match) and marks it initialized.
  void set_value(std::string_view name, Tensor<T> value);

  /// Element count; running statistics only when `include_non_trainable`.
  std::size_t count(bool include_non_trainable) const;

  void zero_grads();

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const Param<T>& p : params_) {
      const std::size_t i = out.add(p.name, p.value.template cast<U>(), p.trainable, p.role);
      out[i].initialized = p.initialized;
    }
    return out;
  }

 private:
  std::vector<Param<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace inucleus

#endif  // INUCLEUS_PARAM_STORE_HPP
