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

#ifndef INUCLEUS_MODEL_CONFIG_HPP
#define INUCLEUS_MODEL_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "inucleus/ops.hpp"

namespace inucleus {

enum class LayerKind {
  conv1d,
  conv2d,
  relu,
  maxpool1d,
  maxpool2d,
  batchnorm,
  inception_nucleus,
  reshape_to_image,
  gap,
  softmax,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/**
 * One entry of a network description. Which fields matter depends on `kind`:
 * convolutions use channels/kernel/stride/padding (2D kernels are square),
 * pools use kernel/stride, and an inception nucleus uses `branches`, each a
 * chain of conv1d / batchnorm / relu specs whose outputs are concatenated
 * channel-wise.
 */
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Padding padding = Padding::same;
  std::vector<std::vector<LayerSpec>> branches;

  static LayerSpec conv1d(std::size_t channels, std::size_t kernel, std::size_t stride);
  static LayerSpec conv2d(std::size_t channels, std::size_t kernel, std::size_t stride);
  static LayerSpec relu();
  static LayerSpec maxpool1d(std::size_t kernel, std::size_t stride);
  static LayerSpec maxpool2d(std::size_t kernel, std::size_t stride);
  static LayerSpec batchnorm();
  static LayerSpec nucleus(std::vector<std::vector<LayerSpec>> branches);
  static LayerSpec reshape_to_image();
  static LayerSpec gap();
  static LayerSpec softmax();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelConfig {
  std::string name;
  std::size_t num_classes = 10;
  std::size_t input_channels = 1;
  std::vector<LayerSpec> layers;
  /// Published size, compared after rounding both to thousands.
  std::optional<std::uint64_t> expected_param_count;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The four published configurations.
const std::vector<std::string>& arch_names();

/// Scaled-down variants with the same topology, used for fast gradient
/// checks and overfitting runs on short (512-sample) inputs.
const std::vector<std::string>& test_arch_names();

/// Builds a named configuration; throws ConfigError listing valid names.
ModelConfig make_config(std::string_view arch, std::size_t num_classes = 10);

/// Structural checks that do not need shapes (branch counts, head layout).
void validate_structure(const ModelConfig& config);

bool has_batchnorm(const ModelConfig& config);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace inucleus

#endif  // INUCLEUS_MODEL_CONFIG_HPP
