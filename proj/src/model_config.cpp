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

#include "inucleus/model_config.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace inucleus {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 10> kKindNames{{
    {LayerKind::conv1d, "conv1d"},
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::maxpool1d, "maxpool1d"},
    {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::inception_nucleus, "inception_nucleus"},
    {LayerKind::reshape_to_image, "reshape_to_image"},
    {LayerKind::gap, "gap"},
    {LayerKind::softmax, "softmax"},
}};

bool is_1d(LayerKind k) {
  return k == LayerKind::conv1d || k == LayerKind::maxpool1d ||
         k == LayerKind::inception_nucleus;
}

bool is_2d(LayerKind k) {
  return k == LayerKind::conv2d || k == LayerKind::maxpool2d || k == LayerKind::gap;
}

std::vector<LayerSpec> conv_block(LayerSpec conv, bool bn) {
  std::vector<LayerSpec> block{std::move(conv)};
  if (bn) block.push_back(LayerSpec::batchnorm());
  block.push_back(LayerSpec::relu());
  return block;
}

void append(std::vector<LayerSpec>& dst, std::vector<LayerSpec> src) {
  for (LayerSpec& s : src) dst.push_back(std::move(s));
}

// "[channels, kernel, stride] x depth": only the first conv of a stacked
// branch strides, so every branch downsamples by the same factor.
std::vector<LayerSpec> branch(std::size_t channels, std::size_t kernel, std::size_t stride,
                              std::size_t depth, bool bn) {
  std::vector<LayerSpec> b;
  for (std::size_t i = 0; i < depth; ++i) {
    append(b, conv_block(LayerSpec::conv1d(channels, kernel, i == 0 ? stride : 1), bn));
  }
  return b;
}

LayerSpec nucleus(std::size_t channels, std::array<std::size_t, 3> kernels, std::size_t stride,
                  bool bn) {
  return LayerSpec::nucleus({branch(channels, kernels[0], stride, 1, bn),
                             branch(channels, kernels[1], stride, 2, bn),
                             branch(channels, kernels[2], stride, 2, bn)});
}

struct TailSizes {
  std::size_t pool1d_kernel, pool1d_stride;
  std::array<std::size_t, 4> widths;  // conv2d channels: first, second pair, last
};

void append_tail(std::vector<LayerSpec>& layers, const TailSizes& t, std::size_t num_classes,
                 bool bn) {
  layers.push_back(LayerSpec::maxpool1d(t.pool1d_kernel, t.pool1d_stride));
  layers.push_back(LayerSpec::reshape_to_image());
  append(layers, conv_block(LayerSpec::conv2d(t.widths[0], 3, 1), bn));
  layers.push_back(LayerSpec::maxpool2d(2, 2));
  append(layers, conv_block(LayerSpec::conv2d(t.widths[1], 3, 1), bn));
  append(layers, conv_block(LayerSpec::conv2d(t.widths[2], 3, 1), bn));
  layers.push_back(LayerSpec::maxpool2d(2, 2));
  append(layers, conv_block(LayerSpec::conv2d(t.widths[3], 3, 1), bn));
  layers.push_back(LayerSpec::maxpool2d(2, 2));
  // Class-score head: no ReLU so logits can go negative before GAP.
  layers.push_back(LayerSpec::conv2d(num_classes, 1, 1));
  if (bn) layers.push_back(LayerSpec::batchnorm());
  layers.push_back(LayerSpec::gap());
  layers.push_back(LayerSpec::softmax());
}

constexpr TailSizes kFullTail{10, 1, {32, 64, 64, 128}};
constexpr TailSizes kMiniTail{4, 1, {4, 8, 8, 8}};

ModelConfig inception_config(std::string name, std::size_t num_classes, bool bn,
                             std::array<std::size_t, 3> nucleus_kernels) {
  ModelConfig c;
  c.name = std::move(name);
  c.num_classes = num_classes;
  append(c.layers, conv_block(LayerSpec::conv1d(32, 80, 4), bn));
  c.layers.push_back(nucleus(64, nucleus_kernels, 4, bn));
  append_tail(c.layers, kFullTail, num_classes, bn);
  return c;
}

ModelConfig mini_config(std::string name, std::size_t num_classes, bool bn) {
  ModelConfig c;
  c.name = std::move(name);
  c.num_classes = num_classes;
  append(c.layers, conv_block(LayerSpec::conv1d(8, 8, 2), bn));
  c.layers.push_back(nucleus(8, {2, 4, 8}, 2, bn));
  append_tail(c.layers, kMiniTail, num_classes, bn);
  return c;
}

std::string layer_label(std::size_t index, const LayerSpec& s) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(s.kind)) + ")";
}

void check_geometry(const LayerSpec& s, const std::string& where) {
  switch (s.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
      if (s.channels == 0) throw ConfigError(where + ": channels must be >= 1");
      [[fallthrough]];
    case LayerKind::maxpool1d:
    case LayerKind::maxpool2d:
      if (s.kernel == 0) throw ConfigError(where + ": kernel must be >= 1");
      if (s.stride == 0) throw ConfigError(where + ": stride must be >= 1");
      break;
    default:
      break;
  }
}

void validate_nucleus(const LayerSpec& s, const std::string& where) {
  if (s.branches.size() < 2) {
    throw ConfigError(where + ": an inception nucleus needs at least 2 branches, got " +
                      std::to_string(s.branches.size()));
  }
  std::size_t ref_stride = 0;
  for (std::size_t b = 0; b < s.branches.size(); ++b) {
    const auto& br = s.branches[b];
    const std::string bwhere = where + " branch " + std::to_string(b);
    std::size_t stride = 1;
    bool has_conv = false;
    for (const LayerSpec& l : br) {
      if (l.kind != LayerKind::conv1d && l.kind != LayerKind::batchnorm &&
          l.kind != LayerKind::relu) {
        throw ConfigError(bwhere + ": only conv1d, batchnorm and relu are allowed, got " +
                          std::string(to_string(l.kind)));
      }
      check_geometry(l, bwhere);
      if (l.kind == LayerKind::conv1d) {
        if (l.padding != Padding::same) {
          throw ConfigError(bwhere + ": nucleus convolutions must use same padding");
        }
        has_conv = true;
        stride *= l.stride;
      }
    }
    if (!has_conv) throw ConfigError(bwhere + ": branch has no conv1d");
    if (b == 0) {
      ref_stride = stride;
    } else if (stride != ref_stride) {
      throw ConfigError(bwhere + ": total stride " + std::to_string(stride) +
                        " differs from branch 0 (" + std::to_string(ref_stride) +
                        "); branch outputs could not be concatenated");
    }
  }
}

nlohmann::json layer_to_json(const LayerSpec& s) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(s.kind));
  switch (s.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
      j["channels"] = s.channels;
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["padding"] = s.padding == Padding::same ? "same" : "valid";
      break;
    case LayerKind::maxpool1d:
    case LayerKind::maxpool2d:
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      break;
    case LayerKind::inception_nucleus: {
      nlohmann::json branches = nlohmann::json::array();
      for (const auto& br : s.branches) {
        nlohmann::json arr = nlohmann::json::array();
        for (const LayerSpec& l : br) arr.push_back(layer_to_json(l));
        branches.push_back(std::move(arr));
      }
      j["branches"] = std::move(branches);
      break;
    }
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.channels = j.value("channels", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.stride = j.value("stride", std::size_t{1});
  const std::string pad = j.value("padding", std::string("same"));
  if (pad != "same" && pad != "valid") throw ConfigError("unknown padding '" + pad + "'");
  s.padding = pad == "same" ? Padding::same : Padding::valid;
  if (j.contains("branches")) {
    for (const auto& br : j.at("branches")) {
      std::vector<LayerSpec> layers;
      for (const auto& l : br) layers.push_back(layer_from_json(l));
      s.branches.push_back(std::move(layers));
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(std::size_t channels, std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.channels = channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t channels, std::size_t kernel, std::size_t stride) {
  LayerSpec s = conv1d(channels, kernel, stride);
  s.kind = LayerKind::conv2d;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool1d(std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::maxpool1d;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool2d(std::size_t kernel, std::size_t stride) {
  LayerSpec s = maxpool1d(kernel, stride);
  s.kind = LayerKind::maxpool2d;
  return s;
}

LayerSpec LayerSpec::batchnorm() {
  LayerSpec s;
  s.kind = LayerKind::batchnorm;
  return s;
}

LayerSpec LayerSpec::nucleus(std::vector<std::vector<LayerSpec>> branches) {
  LayerSpec s;
  s.kind = LayerKind::inception_nucleus;
  s.branches = std::move(branches);
  return s;
}

LayerSpec LayerSpec::reshape_to_image() {
  LayerSpec s;
  s.kind = LayerKind::reshape_to_image;
  return s;
}

LayerSpec LayerSpec::gap() {
  LayerSpec s;
  s.kind = LayerKind::gap;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::softmax;
  return s;
}

const std::vector<std::string>& arch_names() {
  static const std::vector<std::string> names{"inception", "inception_fa", "inception_fi",
                                              "inception_bn"};
  return names;
}

const std::vector<std::string>& test_arch_names() {
  static const std::vector<std::string> names{"inception_mini", "inception_mini_bn"};
  return names;
}

ModelConfig make_config(std::string_view arch, std::size_t num_classes) {
  if (num_classes == 0) throw ConfigError("num_classes must be >= 1");
  ModelConfig c;
  if (arch == "inception") {
    c = inception_config("inception", num_classes, false, {4, 8, 16});
    c.expected_param_count = 289000;
  } else if (arch == "inception_fa") {
    c = inception_config("inception_fa", num_classes, false, {20, 40, 60});
    c.expected_param_count = 789000;
  } else if (arch == "inception_bn") {
    c = inception_config("inception_bn", num_classes, true, {4, 8, 16});
    c.expected_param_count = 292000;
  } else if (arch == "inception_fi") {
    c.name = "inception_fi";
    c.num_classes = num_classes;
    c.layers.push_back(nucleus(32, {60, 80, 100}, 4, false));
    c.layers.push_back(nucleus(64, {4, 8, 16}, 4, false));
    append_tail(c.layers, kFullTail, num_classes, false);
    c.expected_param_count = 479000;
  } else if (arch == "inception_mini") {
    c = mini_config("inception_mini", num_classes, false);
  } else if (arch == "inception_mini_bn") {
    c = mini_config("inception_mini_bn", num_classes, true);
  } else {
    std::string valid;
    for (const auto& n : arch_names()) valid += (valid.empty() ? "" : ", ") + n;
    for (const auto& n : test_arch_names()) valid += ", " + n;
    throw ConfigError("unknown architecture '" + std::string(arch) + "'; valid: " + valid);
  }
  return c;
}

void validate_structure(const ModelConfig& config) {
  if (config.num_classes == 0) throw ConfigError("num_classes must be >= 1");
  if (config.input_channels == 0) throw ConfigError("input_channels must be >= 1");
  if (!(config.bn_momentum > 0.0 && config.bn_momentum < 1.0)) {
    throw ConfigError("bn_momentum must lie in (0, 1)");
  }
  if (!(config.bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be > 0");
  const auto& layers = config.layers;
  if (layers.size() < 3) throw ConfigError("a model needs at least conv2d -> gap -> softmax");

  bool image = false;
  std::size_t reshapes = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& s = layers[i];
    const std::string where = layer_label(i, s);
    check_geometry(s, where);
    if (s.kind == LayerKind::reshape_to_image) {
      ++reshapes;
      image = true;
      continue;
    }
    if (is_1d(s.kind) && image) throw ConfigError(where + ": 1D layer after reshape_to_image");
    if (is_2d(s.kind) && !image) throw ConfigError(where + ": 2D layer before reshape_to_image");
    if (s.kind == LayerKind::inception_nucleus) validate_nucleus(s, where);
    if (s.kind == LayerKind::softmax && i + 1 != layers.size()) {
      throw ConfigError(where + ": softmax must be the last layer");
    }
  }
  if (reshapes != 1) {
    throw ConfigError("expected exactly one reshape_to_image layer, found " +
                      std::to_string(reshapes));
  }

  const std::size_t n = layers.size();
  if (layers[n - 1].kind != LayerKind::softmax) {
    throw ConfigError(layer_label(n - 1, layers[n - 1]) + ": last layer must be softmax");
  }
  if (layers[n - 2].kind != LayerKind::gap) {
    throw ConfigError(layer_label(n - 2, layers[n - 2]) + ": softmax must follow gap");
  }
  std::size_t head = n - 3;
  while (head > 0 && layers[head].kind == LayerKind::batchnorm) --head;
  const LayerSpec& h = layers[head];
  if (h.kind != LayerKind::conv2d || h.kernel != 1) {
    throw ConfigError(layer_label(head, h) + ": the layer feeding gap must be a 1x1 conv2d");
  }
  if (h.channels != config.num_classes) {
    throw ConfigError(layer_label(head, h) + ": head has " + std::to_string(h.channels) +
                      " channels but num_classes is " + std::to_string(config.num_classes));
  }
}

bool has_batchnorm(const ModelConfig& config) {
  for (const LayerSpec& s : config.layers) {
    if (s.kind == LayerKind::batchnorm) return true;
    for (const auto& br : s.branches) {
      for (const LayerSpec& l : br) {
        if (l.kind == LayerKind::batchnorm) return true;
      }
    }
  }
  return false;
}

nlohmann::json to_json(const ModelConfig& config) {
  nlohmann::json j;
  j["name"] = config.name;
  j["num_classes"] = config.num_classes;
  j["input_channels"] = config.input_channels;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& s : config.layers) layers.push_back(layer_to_json(s));
  j["layers"] = std::move(layers);
  j["expected_param_count"] = config.expected_param_count
                                  ? nlohmann::json(*config.expected_param_count)
                                  : nlohmann::json(nullptr);
  j["bn_momentum"] = config.bn_momentum;
  j["bn_epsilon"] = config.bn_epsilon;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.name = j.at("name").get<std::string>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.input_channels = j.value("input_channels", std::size_t{1});
    for (const auto& l : j.at("layers")) c.layers.push_back(layer_from_json(l));
    if (j.contains("expected_param_count") && !j.at("expected_param_count").is_null()) {
      c.expected_param_count = j.at("expected_param_count").get<std::uint64_t>();
    }
    c.bn_momentum = j.value("bn_momentum", 0.9);
    c.bn_epsilon = j.value("bn_epsilon", 1e-5);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

}  // namespace inucleus
