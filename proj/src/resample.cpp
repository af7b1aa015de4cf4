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
#include <numbers>

#include "inucleus/audio.hpp"
#include "inucleus/errors.hpp"

namespace inucleus {

std::vector<float> resample(std::span<const float> x, std::uint32_t from_rate,
                            std::uint32_t to_rate) {
  if (from_rate == 0 || to_rate == 0) throw Error("resample: sample rates must be positive");
  if (x.empty()) return {};
  if (from_rate == to_rate) return {x.begin(), x.end()};

  std::vector<double> src(x.begin(), x.end());
  if (from_rate >= 2 * static_cast<std::uint64_t>(to_rate)) {
    const double fc = 0.45 * to_rate;
    const double alpha = 1.0 - std::exp(-2.0 * std::numbers::pi * fc / from_rate);
    double y = src[0];
    for (double& v : src) {
      y += alpha * (v - y);
      v = y;
    }
  }

  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * to_rate / from_rate));
  std::vector<float> out(out_len);
  const double step = static_cast<double>(from_rate) / to_rate;
  const std::size_t last = src.size() - 1;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = j * step;
    const auto i = static_cast<std::size_t>(t);
    if (i >= last) {
      out[j] = static_cast<float>(src[last]);
      continue;
    }
    const double frac = t - i;
    out[j] = static_cast<float>(src[i] + frac * (src[i + 1] - src[i]));
  }
  return out;
}

Tensor<float> standardize(std::span<const float> x) {
  if (x.empty()) throw Error("cannot standardize an empty clip");
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const double inv = 1.0 / std::max(std::sqrt(var), 1e-8);
  Tensor<float> out({1, x.size()});
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>((x[i] - mean) * inv);
  return out;
}

Tensor<float> prepare(std::span<const float> x, std::size_t target_len) {
  if (x.empty()) throw Error("cannot prepare an empty clip");
  if (target_len == 0) throw Error("target length must be positive");
  std::vector<float> fixed(target_len, 0.0f);
  std::copy_n(x.begin(), std::min(x.size(), target_len), fixed.begin());
  return standardize(fixed);
}

}  // namespace inucleus
