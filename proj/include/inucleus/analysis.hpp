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

#ifndef INUCLEUS_ANALYSIS_HPP
#define INUCLEUS_ANALYSIS_HPP

#include <string>
#include <vector>

#include "inucleus/model.hpp"

namespace inucleus {

/// Shortest decimal text that parses back to the same float.
std::string format_float(float v);

/// Convolution layers in definition order, named by their weight prefix
/// (e.g. "conv1d0", "nucleus0.branch2.conv1d1").
std::vector<std::string> filter_layer_names(const Model<float>& model);

/// Weight tensor of a convolution layer. `layer` is a name from
/// filter_layer_names (a trailing ".weight" is accepted) or its index in
/// that list; empty selects the first layer. ConfigError lists the valid names.
const Param<float>& filter_weights(const Model<float>& model, const std::string& layer);

/// One line per output filter: the filter index, then its in*k (or in*k*k)
/// taps in row-major order. No header.
std::string filters_csv(const Tensor<float>& weights);

/// Tab-separated: source id, label, then the (C, H, W) features flattened
/// row-major.
std::string embedding_row(const std::string& source_id, std::size_t label,
                          const Tensor<float>& features);

}  // namespace inucleus

#endif  // INUCLEUS_ANALYSIS_HPP
