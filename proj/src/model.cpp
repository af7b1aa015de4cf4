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

#include "inucleus/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <utility>

#include "inucleus/ops.hpp"
#include "inucleus/optim.hpp"

namespace inucleus {

namespace detail {

template <typename T>
struct ForwardContext {
  Mode mode = Mode::infer;
  bool record = false;
  /// Running-statistic updates produced by batch norm in train mode.
  std::vector<std::pair<std::size_t, Tensor<T>>>* updates = nullptr;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  /// Per-sample output shape; throws ShapeError when the input cannot be processed.
  virtual Shape output_shape(const Shape& in) const = 0;

  /// Shortest last-axis input extent that yields an output extent >= `out`.
  virtual std::size_t min_input_extent(std::size_t out) const { return out; }

  virtual bool needs_input() const { return false; }
  virtual bool needs_output() const { return false; }

  virtual Batch<T> forward(const Batch<T>& in, const ParamStore<T>& params,
                           ForwardContext<T>& ctx, std::unique_ptr<LayerCache>& cache) const = 0;

  /// `in`/`out` are empty unless needs_input()/needs_output().
  virtual Batch<T> backward(const Batch<T>& in, const Batch<T>& out, LayerCache* cache,
                            Batch<T> grad, ParamStore<T>& params, bool want_grad_in) const = 0;
};

}  // namespace detail

namespace {

using detail::ForwardContext;
using detail::Layer;

template <typename T>
using LayerSpan = std::span<const std::shared_ptr<const Layer<T>>>;

template <typename T>
Batch<T> run_sequence(LayerSpan<T> layers, const Batch<T>& input, const ParamStore<T>& params,
                      ForwardContext<T>& ctx, SequenceTape<T>* tape) {
  const std::size_t n = layers.size();
  if (tape) {
    tape->outputs.assign(n, Batch<T>{});
    tape->caches.clear();
    tape->caches.resize(n);
  }
  Batch<T> current;
  const Batch<T>* cur = &input;
  for (std::size_t i = 0; i < n; ++i) {
    std::unique_ptr<LayerCache> cache;
    Batch<T> out = layers[i]->forward(*cur, params, ctx, cache);
    if (tape) {
      tape->caches[i] = std::move(cache);
      const bool keep =
          layers[i]->needs_output() || (i + 1 < n && layers[i + 1]->needs_input());
      if (keep) {
        tape->outputs[i] = std::move(out);
        cur = &tape->outputs[i];
        continue;
      }
    }
    current = std::move(out);
    cur = &current;
  }
  return cur == &current ? std::move(current) : *cur;
}

template <typename T>
Batch<T> backward_sequence(LayerSpan<T> layers, SequenceTape<T>& tape, const Batch<T>& input,
                           Batch<T> grad, ParamStore<T>& params, bool want_grad_in) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Batch<T>& in = i == 0 ? input : tape.outputs[i - 1];
    grad = layers[i]->backward(in, tape.outputs[i], tape.caches[i].get(), std::move(grad),
                               params, i > 0 || want_grad_in);
    tape.outputs[i].clear();
    tape.caches[i].reset();
  }
  return grad;
}

template <typename T>
Shape sequence_shape(LayerSpan<T> layers, Shape shape) {
  for (const auto& l : layers) shape = l->output_shape(shape);
  return shape;
}

template <typename T>
std::size_t sequence_min_extent(LayerSpan<T> layers, std::size_t out) {
  for (std::size_t i = layers.size(); i-- > 0;) out = layers[i]->min_input_extent(out);
  return out;
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void expect_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) +
                     " input, got " + shape_string(s));
  }
}

template <typename T>
class Conv1DLayer final : public Layer<T> {
 public:
  Conv1DLayer(std::size_t w, std::size_t b, const LayerSpec& spec, std::size_t in_ch)
      : w_(w), b_(b), spec_(spec), in_ch_(in_ch) {}

  Shape output_shape(const Shape& in) const override {
    expect_rank(in, 2, "conv1d");
    if (in[0] != in_ch_) {
      throw ShapeError("conv1d channel mismatch: got " + std::to_string(in[0]) +
                       ", expected " + std::to_string(in_ch_));
    }
    return {spec_.channels, conv_output_extent(in[1], spec_.kernel, spec_.stride, spec_.padding)};
  }

  std::size_t min_input_extent(std::size_t out) const override {
    return (out - 1) * spec_.stride + (spec_.padding == Padding::same ? 1 : spec_.kernel);
  }

  bool needs_input() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>& ps, ForwardContext<T>&,
                   std::unique_ptr<LayerCache>&) const override {
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) {
      out.push_back(conv1d_forward(x, ps[w_].value, ps[b_].value, spec_.stride, spec_.padding));
    }
    return out;
  }

  Batch<T> backward(const Batch<T>& in, const Batch<T>&, LayerCache*, Batch<T> grad,
                    ParamStore<T>& ps, bool want_grad_in) const override {
    Batch<T> grad_in(in.size());
    for (std::size_t n = 0; n < in.size(); ++n) {
      grad_in[n] = conv1d_backward_accumulate(in[n], ps[w_].value, spec_.stride, spec_.padding,
                                              grad[n], ps[w_].grad, ps[b_].grad, want_grad_in);
    }
    return grad_in;
  }

 private:
  std::size_t w_, b_;
  LayerSpec spec_;
  std::size_t in_ch_;
};

template <typename T>
class Conv2DLayer final : public Layer<T> {
 public:
  Conv2DLayer(std::size_t w, std::size_t b, const LayerSpec& spec, std::size_t in_ch)
      : w_(w), b_(b), spec_(spec), in_ch_(in_ch) {}

  Shape output_shape(const Shape& in) const override {
    expect_rank(in, 3, "conv2d");
    if (in[0] != in_ch_) {
      throw ShapeError("conv2d channel mismatch: got " + std::to_string(in[0]) +
                       ", expected " + std::to_string(in_ch_));
    }
    return {spec_.channels, conv_output_extent(in[1], spec_.kernel, spec_.stride, spec_.padding),
            conv_output_extent(in[2], spec_.kernel, spec_.stride, spec_.padding)};
  }

  std::size_t min_input_extent(std::size_t out) const override {
    return (out - 1) * spec_.stride + (spec_.padding == Padding::same ? 1 : spec_.kernel);
  }

  bool needs_input() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>& ps, ForwardContext<T>&,
                   std::unique_ptr<LayerCache>&) const override {
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) {
      out.push_back(conv2d_forward(x, ps[w_].value, ps[b_].value, spec_.stride, spec_.padding));
    }
    return out;
  }

  Batch<T> backward(const Batch<T>& in, const Batch<T>&, LayerCache*, Batch<T> grad,
                    ParamStore<T>& ps, bool want_grad_in) const override {
    Batch<T> grad_in(in.size());
    for (std::size_t n = 0; n < in.size(); ++n) {
      grad_in[n] = conv2d_backward_accumulate(in[n], ps[w_].value, spec_.stride, spec_.padding,
                                              grad[n], ps[w_].grad, ps[b_].grad, want_grad_in);
    }
    return grad_in;
  }

 private:
  std::size_t w_, b_;
  LayerSpec spec_;
  std::size_t in_ch_;
};

// The backward mask is taken from the output: y > 0 exactly where x > 0.
template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  Shape output_shape(const Shape& in) const override { return in; }
  bool needs_output() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>&, ForwardContext<T>&,
                   std::unique_ptr<LayerCache>&) const override {
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) out.push_back(relu_forward(x));
    return out;
  }

  Batch<T> backward(const Batch<T>&, const Batch<T>& out, LayerCache*, Batch<T> grad,
                    ParamStore<T>&, bool) const override {
    for (std::size_t n = 0; n < grad.size(); ++n) {
      T* g = grad[n].data();
      const T* y = out[n].data();
      for (std::size_t i = 0; i < grad[n].size(); ++i) {
        if (!(y[i] > T(0))) g[i] = T(0);
      }
    }
    return grad;
  }
};

struct PoolCache : LayerCache {
  Shape input_shape;
  std::vector<std::vector<std::uint32_t>> argmax;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(const LayerSpec& spec, bool two_d) : spec_(spec), two_d_(two_d) {}

  Shape output_shape(const Shape& in) const override {
    if (two_d_) {
      expect_rank(in, 3, "maxpool2d");
      return {in[0], pool_output_extent(in[1], spec_.kernel, spec_.stride),
              pool_output_extent(in[2], spec_.kernel, spec_.stride)};
    }
    expect_rank(in, 2, "maxpool1d");
    return {in[0], pool_output_extent(in[1], spec_.kernel, spec_.stride)};
  }

  std::size_t min_input_extent(std::size_t out) const override {
    return (out - 1) * spec_.stride + spec_.kernel;
  }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>&, ForwardContext<T>& ctx,
                   std::unique_ptr<LayerCache>& cache) const override {
    auto pc = std::make_unique<PoolCache>();
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) {
      PoolResult<T> r = two_d_ ? maxpool2d_forward(x, spec_.kernel, spec_.stride)
                               : maxpool1d_forward(x, spec_.kernel, spec_.stride);
      out.push_back(std::move(r.out));
      if (ctx.record) pc->argmax.push_back(std::move(r.argmax));
    }
    if (ctx.record) {
      if (!in.empty()) pc->input_shape = in[0].shape();
      cache = std::move(pc);
    }
    return out;
  }

  Batch<T> backward(const Batch<T>&, const Batch<T>&, LayerCache* cache, Batch<T> grad,
                    ParamStore<T>&, bool want_grad_in) const override {
    if (!want_grad_in) return {};
    auto* pc = static_cast<PoolCache*>(cache);
    Batch<T> grad_in;
    grad_in.reserve(grad.size());
    for (std::size_t n = 0; n < grad.size(); ++n) {
      grad_in.push_back(maxpool_backward<T>(pc->input_shape, pc->argmax[n], grad[n]));
    }
    return grad_in;
  }

 private:
  LayerSpec spec_;
  bool two_d_;
};

template <typename T>
struct BatchNormCache : LayerCache {
  Tensor<T> mean;
  Tensor<T> var;
  BnMode mode = BnMode::train;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(std::size_t gamma, std::size_t beta, std::size_t mean, std::size_t var,
                 std::size_t channels, double momentum, double epsilon)
      : gamma_(gamma), beta_(beta), mean_(mean), var_(var), channels_(channels),
        momentum_(momentum), epsilon_(epsilon) {}

  Shape output_shape(const Shape& in) const override {
    if (in.size() < 2 || in[0] != channels_) {
      throw ShapeError("batchnorm over " + std::to_string(channels_) +
                       " channels cannot take input " + shape_string(in));
    }
    return in;
  }

  bool needs_input() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>& ps, ForwardContext<T>& ctx,
                   std::unique_ptr<LayerCache>& cache) const override {
    const BatchNormState<T> s = state(ps, ctx.mode == Mode::train ? BnMode::train : BnMode::infer);
    BatchNormForward<T> r = batchnorm_forward<T>(in, s);
    if (ctx.mode == Mode::train && ctx.updates) {
      ctx.updates->emplace_back(mean_, std::move(r.running_mean));
      ctx.updates->emplace_back(var_, std::move(r.running_var));
    }
    if (ctx.record) {
      auto c = std::make_unique<BatchNormCache<T>>();
      c->mean = std::move(r.mean);
      c->var = std::move(r.var);
      c->mode = s.mode;
      cache = std::move(c);
    }
    return std::move(r.out);
  }

  Batch<T> backward(const Batch<T>& in, const Batch<T>&, LayerCache* cache, Batch<T> grad,
                    ParamStore<T>& ps, bool want_grad_in) const override {
    auto* c = static_cast<BatchNormCache<T>*>(cache);
    const BatchNormState<T> s = state(ps, c->mode);
    BatchNormGrads<T> g = batchnorm_backward<T>(in, s, c->mean, c->var, grad, want_grad_in);
    accumulate(ps[gamma_].grad, g.grad_gamma);
    accumulate(ps[beta_].grad, g.grad_beta);
    return std::move(g.grad_x);
  }

 private:
  BatchNormState<T> state(const ParamStore<T>& ps, BnMode mode) const {
    BatchNormState<T> s;
    s.gamma = ps[gamma_].value;
    s.beta = ps[beta_].value;
    s.running_mean = ps[mean_].value;
    s.running_var = ps[var_].value;
    s.momentum = momentum_;
    s.epsilon = epsilon_;
    s.mode = mode;
    s.stats_initialized = ps[mean_].initialized && ps[var_].initialized;
    return s;
  }

  std::size_t gamma_, beta_, mean_, var_, channels_;
  double momentum_, epsilon_;
};

template <typename T>
struct NucleusCache : LayerCache {
  std::vector<SequenceTape<T>> branches;
};

template <typename T>
class NucleusLayer final : public Layer<T> {
 public:
  explicit NucleusLayer(std::vector<LayerList<T>> branches) : branches_(std::move(branches)) {}

  Shape output_shape(const Shape& in) const override {
    Shape out;
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      const Shape s = sequence_shape<T>(branches_[b], in);
      if (b == 0) {
        out = s;
      } else if (s[1] != out[1]) {
        throw ShapeError("inception nucleus branch " + std::to_string(b) + " emits length " +
                         std::to_string(s[1]) + ", branch 0 emits " + std::to_string(out[1]));
      } else {
        out[0] += s[0];
      }
    }
    return out;
  }

  std::size_t min_input_extent(std::size_t out) const override {
    std::size_t need = 1;
    for (const auto& br : branches_) need = std::max(need, sequence_min_extent<T>(br, out));
    return need;
  }

  bool needs_input() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>& ps, ForwardContext<T>& ctx,
                   std::unique_ptr<LayerCache>& cache) const override {
    std::unique_ptr<NucleusCache<T>> nc;
    if (ctx.record) {
      nc = std::make_unique<NucleusCache<T>>();
      nc->branches.resize(branches_.size());
    }
    std::vector<Batch<T>> outs;
    outs.reserve(branches_.size());
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      outs.push_back(run_sequence<T>(branches_[b], in, ps, ctx, nc ? &nc->branches[b] : nullptr));
    }
    Batch<T> out;
    out.reserve(in.size());
    std::vector<Tensor<T>> parts(branches_.size());
    for (std::size_t n = 0; n < in.size(); ++n) {
      for (std::size_t b = 0; b < branches_.size(); ++b) {
        parts[b] = std::move(outs[b][n]);
        if (parts[b].dim(1) != parts[0].dim(1)) {
          throw ShapeError("inception nucleus branch lengths differ: branch " +
                           std::to_string(b) + " emits " + std::to_string(parts[b].dim(1)) +
                           ", branch 0 emits " + std::to_string(parts[0].dim(1)));
        }
      }
      out.push_back(concat_channels<T>(parts));
    }
    if (nc) cache = std::move(nc);
    return out;
  }

  Batch<T> backward(const Batch<T>& in, const Batch<T>&, LayerCache* cache, Batch<T> grad,
                    ParamStore<T>& ps, bool want_grad_in) const override {
    auto* nc = static_cast<NucleusCache<T>*>(cache);
    Batch<T> grad_in;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      const std::size_t channels = branches_[b].empty() ? 0 : branch_channels(b, in);
      Batch<T> g;
      g.reserve(grad.size());
      for (const Tensor<T>& t : grad) g.push_back(slice_channels(t, offset, channels));
      offset += channels;
      Batch<T> gi = backward_sequence<T>(branches_[b], nc->branches[b], in, std::move(g), ps,
                                         want_grad_in);
      if (!want_grad_in) continue;
      if (grad_in.empty()) {
        grad_in = std::move(gi);
      } else {
        for (std::size_t n = 0; n < gi.size(); ++n) accumulate(grad_in[n], gi[n]);
      }
    }
    return grad_in;
  }

 private:
  std::size_t branch_channels(std::size_t b, const Batch<T>& in) const {
    return sequence_shape<T>(branches_[b], in.at(0).shape())[0];
  }

  std::vector<LayerList<T>> branches_;
};

template <typename T>
class ReshapeLayer final : public Layer<T> {
 public:
  Shape output_shape(const Shape& in) const override {
    expect_rank(in, 2, "reshape_to_image");
    return {1, in[0], in[1]};
  }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>&, ForwardContext<T>&,
                   std::unique_ptr<LayerCache>&) const override {
    Batch<T> out;
    out.reserve(in.size());
    // (channels, length) becomes a one-channel (channels, length) image.
    for (const Tensor<T>& x : in) out.push_back(x.reshape({1, x.dim(0), x.dim(1)}));
    return out;
  }

  Batch<T> backward(const Batch<T>&, const Batch<T>&, LayerCache*, Batch<T> grad,
                    ParamStore<T>&, bool) const override {
    for (Tensor<T>& g : grad) g = std::move(g).reshape({g.dim(1), g.dim(2)});
    return grad;
  }
};

template <typename T>
class GapLayer final : public Layer<T> {
 public:
  Shape output_shape(const Shape& in) const override {
    if (in.size() < 2) throw ShapeError("gap expects (channels, ...), got " + shape_string(in));
    return {in[0]};
  }

  std::size_t min_input_extent(std::size_t) const override { return 1; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>&, ForwardContext<T>& ctx,
                   std::unique_ptr<LayerCache>& cache) const override {
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) out.push_back(gap_forward(x));
    if (ctx.record && !in.empty()) {
      auto pc = std::make_unique<PoolCache>();
      pc->input_shape = in[0].shape();
      cache = std::move(pc);
    }
    return out;
  }

  Batch<T> backward(const Batch<T>&, const Batch<T>&, LayerCache* cache, Batch<T> grad,
                    ParamStore<T>&, bool) const override {
    const Shape& s = static_cast<PoolCache*>(cache)->input_shape;
    Batch<T> grad_in;
    grad_in.reserve(grad.size());
    for (const Tensor<T>& g : grad) grad_in.push_back(gap_backward(s, g));
    return grad_in;
  }
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  Shape output_shape(const Shape& in) const override {
    expect_rank(in, 1, "softmax");
    return in;
  }

  std::size_t min_input_extent(std::size_t) const override { return 1; }
  bool needs_output() const override { return true; }

  Batch<T> forward(const Batch<T>& in, const ParamStore<T>&, ForwardContext<T>&,
                   std::unique_ptr<LayerCache>&) const override {
    Batch<T> out;
    out.reserve(in.size());
    for (const Tensor<T>& x : in) out.push_back(softmax(x));
    return out;
  }

  Batch<T> backward(const Batch<T>&, const Batch<T>& out, LayerCache*, Batch<T> grad,
                    ParamStore<T>&, bool) const override {
    for (std::size_t n = 0; n < grad.size(); ++n) grad[n] = softmax_backward(out[n], grad[n]);
    return grad;
  }
};

// Walks a spec list, registering parameters in definition order and
// tracking the channel count (image stages carry 1 channel after reshape).
template <typename T>
class Builder {
 public:
  Builder(ParamStore<T>& params, std::mt19937_64* rng, const ModelConfig& config)
      : params_(params), rng_(rng), config_(config) {}

  LayerList<T> build(const std::vector<LayerSpec>& specs, std::size_t& channels,
                     const std::string& prefix, const std::string& where) {
    std::map<std::string, std::size_t> counters;
    LayerList<T> layers;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const LayerSpec& s = specs[i];
      const std::string label =
          where + "layer " + std::to_string(i) + " (" + std::string(to_string(s.kind)) + ")";
      auto name = [&](const std::string& tag) {
        return prefix + tag + std::to_string(counters[tag]++);
      };
      switch (s.kind) {
        case LayerKind::conv1d:
        case LayerKind::conv2d: {
          const bool two_d = s.kind == LayerKind::conv2d;
          const std::string base = name(two_d ? "conv2d" : "conv1d");
          const std::size_t taps = two_d ? s.kernel * s.kernel : s.kernel;
          Shape wshape = two_d ? Shape{s.channels, channels, s.kernel, s.kernel}
                               : Shape{s.channels, channels, s.kernel};
          Tensor<T> w = rng_ ? glorot_uniform<T>(wshape, channels * taps, s.channels * taps, *rng_)
                             : Tensor<T>(wshape);
          const std::size_t wi = params_.add(base + ".weight", std::move(w), true, ParamRole::weight);
          const std::size_t bi =
              params_.add(base + ".bias", Tensor<T>({s.channels}), true, ParamRole::bias);
          if (two_d) {
            layers.push_back(std::make_shared<Conv2DLayer<T>>(wi, bi, s, channels));
          } else {
            layers.push_back(std::make_shared<Conv1DLayer<T>>(wi, bi, s, channels));
          }
          channels = s.channels;
          break;
        }
        case LayerKind::batchnorm: {
          const std::string base = name("bn");
          const std::size_t g =
              params_.add(base + ".gamma", Tensor<T>({channels}, T(1)), true, ParamRole::bn_gamma);
          const std::size_t b =
              params_.add(base + ".beta", Tensor<T>({channels}), true, ParamRole::bn_beta);
          const std::size_t m = params_.add(base + ".running_mean", Tensor<T>({channels}), false,
                                            ParamRole::bn_running_mean);
          const std::size_t v = params_.add(base + ".running_var", Tensor<T>({channels}, T(1)),
                                            false, ParamRole::bn_running_var);
          layers.push_back(std::make_shared<BatchNormLayer<T>>(
              g, b, m, v, channels, config_.bn_momentum, config_.bn_epsilon));
          break;
        }
        case LayerKind::relu:
          layers.push_back(std::make_shared<ReluLayer<T>>());
          break;
        case LayerKind::maxpool1d:
        case LayerKind::maxpool2d:
          layers.push_back(
              std::make_shared<MaxPoolLayer<T>>(s, s.kind == LayerKind::maxpool2d));
          break;
        case LayerKind::inception_nucleus: {
          const std::string base = name("nucleus");
          std::vector<LayerList<T>> branches;
          std::size_t total = 0;
          for (std::size_t b = 0; b < s.branches.size(); ++b) {
            std::size_t ch = channels;
            branches.push_back(build(s.branches[b], ch,
                                     base + ".branch" + std::to_string(b) + ".",
                                     label + " branch " + std::to_string(b) + " "));
            total += ch;
          }
          layers.push_back(std::make_shared<NucleusLayer<T>>(std::move(branches)));
          channels = total;
          break;
        }
        case LayerKind::reshape_to_image:
          layers.push_back(std::make_shared<ReshapeLayer<T>>());
          channels = 1;
          break;
        case LayerKind::gap:
          layers.push_back(std::make_shared<GapLayer<T>>());
          break;
        case LayerKind::softmax:
          layers.push_back(std::make_shared<SoftmaxLayer<T>>());
          break;
      }
    }
    return layers;
  }

 private:
  ParamStore<T>& params_;
  std::mt19937_64* rng_;
  const ModelConfig& config_;
};

std::uint64_t next_model_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

std::string layer_label(const ModelConfig& c, std::size_t i) {
  return "layer " + std::to_string(i) + " (" + std::string(to_string(c.layers[i].kind)) + ")";
}

}  // namespace

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  validate_structure(config_);
  std::mt19937_64 rng(seed);
  std::size_t channels = config_.input_channels;
  layers_ = Builder<T>(params_, &rng, config_).build(config_.layers, channels, "", "");
  min_length_ = sequence_min_extent<T>(layers_, 1);
  try {
    layer_shapes(min_length_);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("model cannot be built: ") + e.what());
  }
  id_ = next_model_id();
}

template <typename T>
Model<T>::Model(ModelConfig config, ParamStore<T> params) : config_(std::move(config)) {
  validate_structure(config_);
  std::size_t channels = config_.input_channels;
  layers_ = Builder<T>(params_, nullptr, config_).build(config_.layers, channels, "", "");
  min_length_ = sequence_min_extent<T>(layers_, 1);
  if (params.size() != params_.size()) {
    throw ShapeError("parameter set has " + std::to_string(params.size()) +
                     " tensors, model '" + config_.name + "' expects " +
                     std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param<T>& dst = params_[i];
    if (!params.contains(dst.name)) throw ShapeError("missing parameter '" + dst.name + "'");
    const Param<T>& src = params.get(dst.name);
    if (src.value.shape() != dst.value.shape()) {
      throw ShapeError("parameter '" + dst.name + "' has shape " +
                       shape_string(src.value.shape()) + ", model expects " +
                       shape_string(dst.value.shape()));
    }
    dst.value = src.value;
    dst.initialized = src.initialized;
  }
  id_ = next_model_id();
}

template <typename T>
Model<T>::Model(const Model& other)
    : config_(other.config_),
      params_(other.params_),
      layers_(other.layers_),
      min_length_(other.min_length_),
      id_(next_model_id()) {}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other) {
    config_ = other.config_;
    params_ = other.params_;
    layers_ = other.layers_;
    min_length_ = other.min_length_;
    id_ = next_model_id();
  }
  return *this;
}

template <typename T>
Model<T>::Model(Model&&) noexcept = default;
template <typename T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;
template <typename T>
Model<T>::~Model() = default;

template <typename T>
std::vector<Shape> Model<T>::layer_shapes(std::size_t length) const {
  std::vector<Shape> shapes;
  Shape s{config_.input_channels, length};
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = layers_[i]->output_shape(s);
    } catch (const ShapeError& e) {
      throw ShapeError(layer_label(config_, i) + ": " + e.what());
    }
    shapes.push_back(s);
  }
  return shapes;
}

template <typename T>
void Model<T>::check_inputs(const Batch<T>& inputs) const {
  if (inputs.empty()) throw ShapeError("forward needs at least one input");
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const Tensor<T>& x = inputs[n];
    if (x.rank() != 2 || x.dim(0) != config_.input_channels) {
      throw ShapeError("input " + std::to_string(n) + " must be (" +
                       std::to_string(config_.input_channels) + ", length), got " +
                       shape_string(x.shape()));
    }
    if (x.dim(1) < min_length_) {
      throw ShapeError("input " + std::to_string(n) + " is too short: length " +
                       std::to_string(x.dim(1)) + " is below the minimum input length " +
                       std::to_string(min_length_) + " for '" + config_.name + "'");
    }
    if (x.shape() != inputs[0].shape()) {
      throw ShapeError("batch items must share a length: input " + std::to_string(n) +
                       " has shape " + shape_string(x.shape()));
    }
  }
}

template <typename T>
ForwardResult<T> Model<T>::forward(const Batch<T>& inputs, Mode mode) {
  check_inputs(inputs);
  std::vector<std::pair<std::size_t, Tensor<T>>> updates;
  ForwardContext<T> ctx{mode, true, &updates};
  ForwardResult<T> r;
  r.tape.model_id = id_;
  r.tape.mode = mode;
  if (layers_.front()->needs_input()) r.tape.input = inputs;
  const LayerSpan<T> body(layers_.data(), layers_.size() - 1);
  r.logits = run_sequence<T>(body, inputs, params_, ctx, &r.tape.body);
  r.probs.reserve(r.logits.size());
  for (const Tensor<T>& z : r.logits) r.probs.push_back(softmax(z));
  r.tape.probs = r.probs;
  for (auto& [index, value] : updates) {
    params_[index].value = std::move(value);
    params_[index].initialized = true;
  }
  return r;
}

template <typename T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& input, Mode mode) {
  return forward(Batch<T>{input}, mode);
}

template <typename T>
Batch<T> Model<T>::predict(const Batch<T>& inputs) const {
  check_inputs(inputs);
  ForwardContext<T> ctx{Mode::infer, false, nullptr};
  return run_sequence<T>(layers_, inputs, params_, ctx, nullptr);
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& input) const {
  return std::move(predict(Batch<T>{input}).front());
}

template <typename T>
Batch<T> Model<T>::logits(const Batch<T>& inputs) const {
  check_inputs(inputs);
  ForwardContext<T> ctx{Mode::infer, false, nullptr};
  const LayerSpan<T> body(layers_.data(), layers_.size() - 1);
  return run_sequence<T>(body, inputs, params_, ctx, nullptr);
}

template <typename T>
Batch<T> Model<T>::features(const Batch<T>& inputs) const {
  check_inputs(inputs);
  ForwardContext<T> ctx{Mode::infer, false, nullptr};
  const LayerSpan<T> trunk(layers_.data(), layers_.size() - 2);
  return run_sequence<T>(trunk, inputs, params_, ctx, nullptr);
}

template <typename T>
void Model<T>::check_tape(const Tape<T>& tape, std::size_t batch) const {
  if (tape.model_id != id_) throw Error("tape was recorded by a different model");
  if (tape.consumed) throw Error("tape already consumed by a previous backward call");
  if (tape.body.caches.size() + 1 != layers_.size()) throw Error("tape/model layer mismatch");
  if (batch != tape.probs.size()) {
    throw ShapeError("gradient batch size " + std::to_string(batch) + " does not match tape (" +
                     std::to_string(tape.probs.size()) + ")");
  }
}

template <typename T>
void Model<T>::backward_from_logits(Tape<T>& tape, const Batch<T>& grad_logits) {
  check_tape(tape, grad_logits.size());
  for (std::size_t n = 0; n < grad_logits.size(); ++n) {
    if (grad_logits[n].shape() != tape.probs[n].shape()) {
      throw ShapeError("gradient " + std::to_string(n) + " has shape " +
                       shape_string(grad_logits[n].shape()) + ", expected " +
                       shape_string(tape.probs[n].shape()));
    }
  }
  params_.zero_grads();
  const LayerSpan<T> body(layers_.data(), layers_.size() - 1);
  backward_sequence<T>(body, tape.body, tape.input, grad_logits, params_, false);
  tape.consumed = true;
  tape.input.clear();
}

template <typename T>
void Model<T>::backward(Tape<T>& tape, const Batch<T>& grad_probs) {
  check_tape(tape, grad_probs.size());
  Batch<T> grad_logits;
  grad_logits.reserve(grad_probs.size());
  for (std::size_t n = 0; n < grad_probs.size(); ++n) {
    grad_logits.push_back(softmax_backward(tape.probs[n], grad_probs[n]));
  }
  backward_from_logits(tape, grad_logits);
}

template class Model<float>;
template class Model<double>;

std::size_t count_params_for(const std::string& arch, bool include_non_trainable,
                             std::size_t num_classes) {
  return Model<float>(make_config(arch, num_classes), 0).count_params(include_non_trainable);
}

bool matches_published_count(std::uint64_t count, std::uint64_t expected) {
  return (count + 500) / 1000 == (expected + 500) / 1000;
}

}  // namespace inucleus
