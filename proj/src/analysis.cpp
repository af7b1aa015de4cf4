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

#include "inucleus/analysis.hpp"

#include <charconv>

#include "inucleus/errors.hpp"

namespace inucleus {

std::string format_float(float v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> filter_layer_names(const Model<float>& model) {
  std::vector<std::string> names;
  for (const Param<float>& p : model.params()) {
    if (p.role == ParamRole::weight) names.push_back(p.name.substr(0, p.name.size() - 7));
  }
  return names;
}

const Param<float>& filter_weights(const Model<float>& model, const std::string& layer) {
  const std::vector<std::string> names = filter_layer_names(model);
  std::string key = layer.empty() ? names.front() : layer;
  if (key.size() > 7 && key.compare(key.size() - 7, 7, ".weight") == 0) key.resize(key.size() - 7);
  if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos) {
    const std::size_t i = std::stoul(key);
    if (i < names.size()) key = names[i];
  }
  for (const std::string& n : names) {
    if (n == key) return model.params().get(n + ".weight");
  }
  std::string list;
  for (const std::string& n : names) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown layer '" + layer + "'; convolution layers are: " + list);
}

std::string filters_csv(const Tensor<float>& weights) {
  if (weights.rank() < 2) throw ShapeError("filter export needs a convolution kernel");
  const std::size_t rows = weights.dim(0);
  const std::size_t taps = weights.size() / rows;
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r);
    for (std::size_t t = 0; t < taps; ++t) out += "," + format_float(weights[r * taps + t]);
    out += '\n';
  }
  return out;
}

std::string embedding_row(const std::string& source_id, std::size_t label,
                          const Tensor<float>& features) {
  std::string out = source_id + '\t' + std::to_string(label);
  for (float v : features.values()) out += '\t' + format_float(v);
  out += '\n';
  return out;
}

}  // namespace inucleus
