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

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "inucleus/audio.hpp"
#include "inucleus/errors.hpp"

namespace inucleus {

namespace {

enum class Family { tone, chirp, noise, am, two_tone };

struct SignalClass {
  const char* name;
  Family family;
  double f0;
  double f1;  // chirp end, AM modulation rate, or second tone
};

constexpr std::array<SignalClass, 10> kClasses{{
    {"tone_300", Family::tone, 300, 0},
    {"tone_1200", Family::tone, 1200, 0},
    {"chirp_up", Family::chirp, 200, 3000},
    {"white_noise", Family::noise, 0, 0},
    {"am_800", Family::am, 800, 8},
    {"tone_2500", Family::tone, 2500, 0},
    {"chirp_down", Family::chirp, 3000, 200},
    {"am_2000", Family::am, 2000, 15},
    {"tone_3200", Family::tone, 3200, 0},
    {"two_tone", Family::two_tone, 500, 1700},
}};

constexpr double kNoiseFloor = 0.05;

}  // namespace

const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const SignalClass& c : kClasses) n.emplace_back(c.name);
    return n;
  }();
  return names;
}

std::vector<float> synth_signal(std::size_t label, std::uint64_t seed, std::size_t index,
                                std::size_t length, std::uint32_t rate) {
  if (label >= kClasses.size()) throw ConfigError("synthetic label out of range");
  if (rate == 0) throw ConfigError("synthetic sample rate must be positive");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const SignalClass& c = kClasses[label];
  const double two_pi = 2.0 * std::numbers::pi;
  const double amp = 0.3 + 0.7 * unit(rng);
  const double detune = 1.0 + 0.06 * (unit(rng) - 0.5);
  const double phase = two_pi * unit(rng);
  const double phase2 = two_pi * unit(rng);
  const double duration = static_cast<double>(length) / rate;

  std::vector<float> x(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / rate;
    double v = 0.0;
    switch (c.family) {
      case Family::tone:
        v = std::sin(two_pi * c.f0 * detune * t + phase);
        break;
      case Family::chirp: {
        const double f0 = c.f0 * detune, f1 = c.f1 * detune;
        v = std::sin(two_pi * (f0 * t + (f1 - f0) * t * t / (2.0 * duration)) + phase);
        break;
      }
      case Family::noise:
        v = gauss(rng) / 3.0;
        break;
      case Family::am:
        v = (0.5 + 0.5 * std::sin(two_pi * c.f1 * t + phase2)) *
            std::sin(two_pi * c.f0 * detune * t + phase);
        break;
      case Family::two_tone:
        v = 0.5 * std::sin(two_pi * c.f0 * detune * t + phase) +
            0.5 * std::sin(two_pi * c.f1 * detune * t + phase2);
        break;
    }
    x[n] = static_cast<float>(amp * v + kNoiseFloor * gauss(rng));
  }
  return x;
}

std::vector<Sample> synth_dataset(std::size_t num_classes, std::size_t per_class,
                                  std::uint64_t seed, std::size_t length, std::uint32_t rate) {
  if (num_classes < 1 || num_classes > kClasses.size()) {
    throw ConfigError("synthetic dataset supports 1.." + std::to_string(kClasses.size()) +
                      " classes, got " + std::to_string(num_classes));
  }
  if (length == 0) throw ConfigError("synthetic clip length must be positive");
  std::vector<Sample> out;
  out.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::vector<float> x = synth_signal(c, seed, i, length, rate);
      out.push_back(Sample{prepare(x, length), c,
                           "synth_" + std::string(kClasses[c].name) + "_" + std::to_string(i),
                           std::nullopt});
    }
  }
  return out;
}

}  // namespace inucleus
