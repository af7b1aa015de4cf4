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

#include "inucleus/train.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "inucleus/errors.hpp"
#include "inucleus/ops.hpp"

namespace inucleus {

namespace {

bool finite(const Tensor<float>& t) {
  for (float v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

[[noreturn]] void numerical_failure(const std::string& what, std::size_t epoch, std::size_t step) {
  throw NumericalError("non-finite " + what + " at epoch " + std::to_string(epoch) + ", step " +
                       std::to_string(step));
}

// First non-finite parameter value, if any, else `fallback`.
std::string blame(const ParamStore<float>& params, const std::string& fallback) {
  for (const Param<float>& p : params) {
    if (!finite(p.value)) return "parameter '" + p.name + "'";
  }
  return fallback;
}

void check_dataset(const std::vector<Sample>& set, std::size_t num_classes, const char* what) {
  for (const Sample& s : set) {
    if (s.label >= num_classes) {
      throw ConfigError(std::string(what) + " sample '" + s.source_id + "' has label " +
                        std::to_string(s.label) + ", model has " + std::to_string(num_classes) +
                        " classes");
    }
  }
}

}  // namespace

std::size_t argmax(const Tensor<float>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

TrainResult train(Model<float>& model, const std::vector<Sample>& train_set,
                  const TrainConfig& config, const EpochSink& sink,
                  const std::vector<Sample>* test_set) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.max_epochs < 1) throw ConfigError("max epochs must be >= 1");
  if (config.lr < 0.0) throw ConfigError("learning rate must be >= 0");
  check_dataset(train_set, model.config().num_classes, "training");

  ParamStore<float>& params = model.params();
  const RegConfig reg{config.lambda, {ParamRole::weight}};
  std::size_t micro = config.micro_batch;
  if (micro == 0) micro = has_batchnorm(model.config()) ? config.batch_size : 4;

  TrainResult result;
  AdamState<float>& adam = result.optimizer;
  adam.lr = config.lr;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.eps = config.eps;

  std::vector<Tensor<float>> accum(params.size());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  const std::size_t n = train_set.size();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, steps = 0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      double xent = 0.0;
      const bool single_pass = end - start <= micro;

      for (std::size_t m0 = start; m0 < end; m0 += micro) {
        const std::size_t m1 = std::min(end, m0 + micro);
        Batch<float> inputs;
        for (std::size_t i = m0; i < m1; ++i) inputs.push_back(train_set[order[i]].waveform);
        ForwardResult<float> fr = model.forward(inputs, Mode::train);
        Batch<float> grads;
        for (std::size_t k = 0; k < fr.logits.size(); ++k) {
          if (!finite(fr.logits[k])) numerical_failure(blame(params, "logits"), epoch, steps + 1);
          const std::size_t label = train_set[order[m0 + k]].label;
          XentResult<float> x = softmax_xent(fr.logits[k], label);
          xent += x.loss;
          if (argmax(fr.logits[k]) == label) ++correct;
          for (float& g : x.grad_logits.values()) g = static_cast<float>(g * scale);
          grads.push_back(std::move(x.grad_logits));
        }
        model.backward_from_logits(fr.tape, grads);
        if (single_pass) break;
        for (std::size_t p = 0; p < params.size(); ++p) {
          if (!params[p].trainable) continue;
          if (m0 == start) {
            accum[p] = params[p].grad;
          } else {
            for (std::size_t i = 0; i < accum[p].size(); ++i) accum[p][i] += params[p].grad[i];
          }
        }
      }
      if (!single_pass) {
        for (std::size_t p = 0; p < params.size(); ++p) {
          if (params[p].trainable) params[p].grad = accum[p];
        }
      }

      const double penalty = add_l2_grad(params, reg);
      const double step_loss = xent * scale + penalty;
      ++steps;
      if (!std::isfinite(step_loss)) numerical_failure(blame(params, "loss"), epoch, steps);
      for (const Param<float>& p : params) {
        if (p.trainable && !finite(p.grad)) {
          numerical_failure("gradient of '" + p.name + "'", epoch, steps);
        }
      }
      adam_step(params, adam);
      loss_sum += step_loss * static_cast<double>(end - start);
    }

    EpochReport r;
    r.epoch = epoch;
    r.train_loss = loss_sum / static_cast<double>(n);
    r.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    r.steps = steps;
    if (test_set && !test_set->empty()) r.test_accuracy = evaluate(model, *test_set).accuracy;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(r);

    const bool keep_going = !sink || sink(r, model, adam);
    if (r.train_loss < best - config.min_delta) {
      best = r.train_loss;
      stale = 0;
    } else {
      ++stale;
    }
    if (config.patience > 0 && stale >= config.patience) {
      result.converged = true;
      break;
    }
    if (!keep_going) break;
  }
  return result;
}

EvalResult evaluate(const Model<float>& model, const std::vector<Sample>& samples,
                    std::size_t batch_size) {
  if (samples.empty()) throw ConfigError("evaluation set is empty");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  const std::size_t classes = model.config().num_classes;
  check_dataset(samples, classes, "evaluation");
  EvalResult r;
  r.count = samples.size();
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    Batch<float> inputs;
    for (std::size_t i = start; i < end; ++i) inputs.push_back(samples[i].waveform);
    const Batch<float> logits = model.logits(inputs);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const std::size_t label = samples[start + k].label;
      const std::size_t pred = argmax(logits[k]);
      ++r.confusion[label][pred];
      if (pred == label) ++correct;
      loss += softmax_xent(logits[k], label).loss;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  r.mean_loss = loss / static_cast<double>(samples.size());
  return r;
}

std::string loss_digest(const std::vector<EpochReport>& reports) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const EpochReport& r : reports) {
    const auto bits = std::bit_cast<std::uint64_t>(r.train_loss);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace inucleus
