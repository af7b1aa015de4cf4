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

#ifndef INUCLEUS_AUDIO_HPP
#define INUCLEUS_AUDIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "inucleus/tensor.hpp"

namespace inucleus {

inline constexpr std::uint32_t kTargetRate = 8000;
inline constexpr std::size_t kTargetLength = 32000;

struct Audio {
  std::vector<float> samples;
  std::uint32_t sample_rate = 0;
};

/// RIFF/WAVE with PCM 8/16/24/32-bit or 32-bit float data; channels are averaged.
Audio decode_wav(std::span<const std::uint8_t> bytes);
Audio read_wav(const std::filesystem::path& path);

/// Mono WAV encoder; bits_per_sample is 16 (PCM) or 32 (float).
std::vector<std::uint8_t> encode_wav(std::span<const float> samples, std::uint32_t sample_rate,
                                     unsigned bits_per_sample = 16);
void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               std::uint32_t sample_rate, unsigned bits_per_sample = 16);

/// Linear-interpolation resampler; downsampling by 2x or more is preceded by
/// a single-pole low-pass at 0.45 * to_rate. Output length round(L * to / from).
std::vector<float> resample(std::span<const float> x, std::uint32_t from_rate,
                            std::uint32_t to_rate = kTargetRate);

/// Zero-pads or truncates to target_len, then standardizes the whole clip
/// to zero mean and unit variance (std floored at 1e-8). Returns (1, target_len).
Tensor<float> prepare(std::span<const float> x, std::size_t target_len = kTargetLength);

/// Per-clip standardization without changing the length. Returns (1, L).
Tensor<float> standardize(std::span<const float> x);

struct Sample {
  Tensor<float> waveform;  // (1, L)
  std::size_t label = 0;
  std::string source_id;
  std::optional<int> fold;
};

struct ManifestRow {
  std::string file_name;
  int fold = 0;
  std::size_t class_id = 0;
  std::string class_name;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  /// class_names[id] for every id in 0..num_classes-1.
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
};

/// Header names for each manifest field; defaults follow UrbanSound8K.
struct ManifestColumns {
  std::string file_name = "slice_file_name";
  std::string fold = "fold";
  std::string class_id = "classID";
  std::string class_name = "class";
};

Manifest parse_manifest(const std::string& csv, const ManifestColumns& columns = {});
Manifest read_manifest(const std::filesystem::path& path, const ManifestColumns& columns = {});
std::string format_manifest(const Manifest& manifest, const ManifestColumns& columns = {});

/// Rows whose fold is in test_folds form the test split (manifest order);
/// the rest form the training split, shuffled with `seed`.
std::pair<std::vector<ManifestRow>, std::vector<ManifestRow>> make_splits(
    const Manifest& manifest, const std::set<int>& test_folds, std::uint64_t seed);

/// floor(N * fraction) rows chosen with `seed`, kept in manifest order.
Manifest subsample(const Manifest& manifest, double fraction, std::uint64_t seed);

/// Finds a row's file under data_dir, trying fold<N>/, audio/fold<N>/ and the directory itself.
std::filesystem::path locate_clip(const std::filesystem::path& data_dir, const ManifestRow& row);

/// Decode, resample to 8 kHz and prepare every row.
std::vector<Sample> load_samples(const std::vector<ManifestRow>& rows,
                                 const std::filesystem::path& data_dir,
                                 std::size_t target_len = kTargetLength);

/// Names of the synthetic signal classes, in label order (at most 10).
const std::vector<std::string>& synth_class_names();

/// per_class samples of each of the first num_classes signal families,
/// generated at `rate` and prepared to `length`. Class-major order.
std::vector<Sample> synth_dataset(std::size_t num_classes, std::size_t per_class,
                                  std::uint64_t seed, std::size_t length = kTargetLength,
                                  std::uint32_t rate = kTargetRate);

/// Raw (unstandardized) synthetic waveform for one draw.
std::vector<float> synth_signal(std::size_t label, std::uint64_t seed, std::size_t index,
                                std::size_t length, std::uint32_t rate);

}  // namespace inucleus

#endif  // INUCLEUS_AUDIO_HPP
