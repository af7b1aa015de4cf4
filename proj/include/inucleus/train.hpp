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

#ifndef INUCLEUS_TRAIN_HPP
#define INUCLEUS_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inucleus/audio.hpp"
#include "inucleus/model.hpp"
#include "inucleus/optim.hpp"

namespace inucleus {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lambda = 1e-4;
  /// Stop after this many epochs without a train-loss improvement of at
  /// least min_delta; 0 disables the rule.
  std::size_t patience = 20;
  double min_delta = 1e-4;
  /// Samples per forward/backward pass inside a step; 0 picks 4, or the
  /// whole batch for batch-norm models. With batch norm, a smaller value
  /// normalizes over each micro-batch separately.
  std::size_t micro_batch = 0;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  /// Mean cross-entropy plus L2 penalty over the epoch's steps, weighted by step size.
  double train_loss = 0.0;
  /// Accuracy of the train-mode predictions made while stepping.
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
};

/// Called after every epoch; returning false stops training.
using EpochSink = std::function<bool(const EpochReport&, const Model<float>&,
                                     const AdamState<float>&)>;

struct TrainResult {
  std::vector<EpochReport> reports;
  AdamState<float> optimizer;
  bool converged = false;
};

/// Minibatch Adam on mean cross-entropy + lambda * sum(w^2). Epochs reshuffle
/// with a generator seeded once from config.seed. Throws NumericalError on a
/// non-finite loss, gradient or parameter.
TrainResult train(Model<float>& model, const std::vector<Sample>& train_set,
                  const TrainConfig& config, const EpochSink& sink = {},
                  const std::vector<Sample>* test_set = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  double mean_loss = 0.0;
  std::size_t count = 0;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(const Tensor<float>& scores);

EvalResult evaluate(const Model<float>& model, const std::vector<Sample>& samples,
                    std::size_t batch_size = 4);

/// 64-bit FNV-1a over the bit patterns of the per-epoch train losses, as hex.
std::string loss_digest(const std::vector<EpochReport>& reports);

}  // namespace inucleus

#endif  // INUCLEUS_TRAIN_HPP
