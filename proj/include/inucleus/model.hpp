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

#ifndef INUCLEUS_MODEL_HPP
#define INUCLEUS_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "inucleus/model_config.hpp"
#include "inucleus/param_store.hpp"
#include "inucleus/tensor.hpp"

namespace inucleus {

enum class Mode { train, infer };

template <typename T>
using Batch = std::vector<Tensor<T>>;

/// Per-layer data retained between forward and backward.
struct LayerCache {
  virtual ~LayerCache() = default;
};

namespace detail {
template <typename T>
class Layer;
}  // namespace detail

template <typename T>
using LayerList = std::vector<std::shared_ptr<const detail::Layer<T>>>;

/// Activations of a layer chain. outputs[i] is kept only when layer i or
/// layer i + 1 needs it for backward; other entries are left empty.
template <typename T>
struct SequenceTape {
  std::vector<Batch<T>> outputs;
  std::vector<std::unique_ptr<LayerCache>> caches;
};

/// Everything backward needs from one forward call. Single use.
template <typename T>
struct Tape {
  std::uint64_t model_id = 0;
  Mode mode = Mode::infer;
  Batch<T> input;
  SequenceTape<T> body;
  Batch<T> probs;
  bool consumed = false;
};

template <typename T>
struct ForwardResult {
  Batch<T> probs;
  Batch<T> logits;
  Tape<T> tape;
};

/**
 * A network built from a ModelConfig. Parameters live in a ParamStore owned
 * by the model; layers are immutable and shared between copies.
 *
 * forward() in train mode updates batch-norm running statistics after the
 * pass completes. backward() overwrites (never accumulates) every trainable
 * gradient and consumes the tape.
 */
template <typename T>
class Model {
 public:
  /// Builds and Glorot-initializes every parameter from `seed`.
  Model(ModelConfig config, std::uint64_t seed);

  /// Adopts existing parameters; names and shapes must match the config.
  Model(ModelConfig config, ParamStore<T> params);

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore<T>& params() noexcept { return params_; }
  const ParamStore<T>& params() const noexcept { return params_; }
  std::uint64_t id() const noexcept { return id_; }

  std::size_t count_params(bool include_non_trainable = false) const {
    return params_.count(include_non_trainable);
  }

  /// Shortest input length every layer can process, derived from the layer chain.
  std::size_t min_input_length() const noexcept { return min_length_; }

  /// Per-sample output shape of each top-level layer for an input of `length` samples.
  std::vector<Shape> layer_shapes(std::size_t length) const;

  ForwardResult<T> forward(const Batch<T>& inputs, Mode mode);
  ForwardResult<T> forward(const Tensor<T>& input, Mode mode);

  /// Inference-mode class probabilities; read-only, safe to call concurrently.
  Tensor<T> predict(const Tensor<T>& input) const;
  Batch<T> predict(const Batch<T>& inputs) const;

  /// Inference-mode pre-softmax scores.
  Batch<T> logits(const Batch<T>& inputs) const;

  /// Inference-mode activations feeding global average pooling.
  Batch<T> features(const Batch<T>& inputs) const;

  void backward(Tape<T>& tape, const Batch<T>& grad_probs);
  void backward_from_logits(Tape<T>& tape, const Batch<T>& grad_logits);

  template <typename U>
  Model<U> cast() const {
    return Model<U>(config_, params_.template cast<U>());
  }

 private:
  void check_inputs(const Batch<T>& inputs) const;
  void check_tape(const Tape<T>& tape, std::size_t batch) const;

  ModelConfig config_;
  ParamStore<T> params_;
  LayerList<T> layers_;
  std::size_t min_length_ = 1;
  std::uint64_t id_ = 0;
};

/// Parameter count of a named architecture.
std::size_t count_params_for(const std::string& arch, bool include_non_trainable = false,
                             std::size_t num_classes = 10);

/// True when `count` and `expected` agree after rounding both to thousands.
bool matches_published_count(std::uint64_t count, std::uint64_t expected);

}  // namespace inucleus

#endif  // INUCLEUS_MODEL_HPP
