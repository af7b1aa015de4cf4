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

#ifndef INUCLEUS_CHECKPOINT_HPP
#define INUCLEUS_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inucleus/model.hpp"
#include "inucleus/optim.hpp"

namespace inucleus {

/*
 * File layout (all integers little-endian):
 *
 *   "INUC" | u32 version | u64 header_len | header_len bytes of JSON | blobs
 *
 * The JSON header holds the model config, a tensor manifest (name, dtype,
 * shape, byte offset into the blob section, trainable, role, initialized),
 * optional Adam state, and free-form metadata. Blobs are raw f32 values.
 */
inline constexpr char kCheckpointMagic[4] = {'I', 'N', 'U', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t epoch = 0;
  std::uint64_t seed = 0;
  /// Hex digest of the loss log up to `epoch`; empty when not training.
  std::string loss_digest;
  std::vector<std::string> class_names;
};

struct Checkpoint {
  ModelConfig config;
  ParamStore<float> params;
  std::optional<AdamState<float>> optimizer;
  CheckpointMeta meta;

  Model<float> model() const { return Model<float>(config, params); }
};

std::vector<std::uint8_t> serialize_checkpoint(const Model<float>& model,
                                               const AdamState<float>* optimizer,
                                               const CheckpointMeta& meta);

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const AdamState<float>* optimizer = nullptr,
                     const CheckpointMeta& meta = {});

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies the parameters of a checkpoint into an existing model; ShapeError
/// when names or shapes disagree.
void load_parameters(Model<float>& model, const Checkpoint& checkpoint);

}  // namespace inucleus

#endif  // INUCLEUS_CHECKPOINT_HPP
