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

// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit when any fails.
//
//   acceptance --work-dir DIR [--only 1,2,...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inucleus/audio.hpp"
#include "inucleus/checkpoint.hpp"
#include "inucleus/cli.hpp"
#include "inucleus/errors.hpp"
#include "inucleus/model.hpp"
#include "inucleus/ops.hpp"
#include "inucleus/optim.hpp"
#include "inucleus/runtime.hpp"
#include "inucleus/train.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace inucleus;
using testing::dot;
using testing::random_tensor;
using testing::rel_error;
using testing::smooth_central_difference;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs the CLI in-process; stderr is kept for diagnostics.
struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "inucleus");
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string last_line(const std::string& s) {
  std::istringstream in(s);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return last;
}

// ---------------------------------------------------------------- 1

Outcome criterion_param_counts() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t inc = count_params_for("inception");
  const std::size_t fa = count_params_for("inception_fa");
  const std::size_t bn = count_params_for("inception_bn", true);
  const std::size_t fi = count_params_for("inception_fi");
  const double secs = seconds_since(t0);
  const bool exact = inc == 289450 && fa == 789162 && bn == 292050 && fi == 593706;
  const bool rounded = matches_published_count(inc, 289000) && matches_published_count(fa, 789000) &&
                       matches_published_count(bn, 292000);
  return {exact && rounded && secs < 1.0,
          "inception=" + std::to_string(inc) + " inception_fa=" + std::to_string(fa) +
              " inception_bn(total)=" + std::to_string(bn) + " inception_fi=" + std::to_string(fi) +
              " (diverges from published 479K, literal layer table) in " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------- 2

struct FdStats {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  void merge(const FdStats& o) {
    worst = std::max(worst, o.worst);
    checked += o.checked;
    skipped += o.skipped;
  }
};

template <typename F>
FdStats fd_all(F&& loss, Tensor<double>& target, const Tensor<double>& analytic) {
  FdStats s;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto numeric = smooth_central_difference(loss, target[i]);
    if (!numeric) {
      ++s.skipped;
      continue;
    }
    ++s.checked;
    s.worst = std::max(s.worst, rel_error(analytic[i], *numeric));
  }
  return s;
}

// Every (kind, kernel, stride, padding) used by the published configurations.
using Geometry = std::tuple<LayerKind, std::size_t, std::size_t, Padding>;

void collect_geometry(const std::vector<LayerSpec>& layers, std::set<Geometry>& out) {
  for (const LayerSpec& s : layers) {
    switch (s.kind) {
      case LayerKind::conv1d:
      case LayerKind::conv2d:
      case LayerKind::maxpool1d:
      case LayerKind::maxpool2d:
        out.emplace(s.kind, s.kernel, s.stride, s.padding);
        break;
      case LayerKind::inception_nucleus:
        for (const auto& b : s.branches) collect_geometry(b, out);
        break;
      default:
        break;
    }
  }
}

FdStats check_geometry(const Geometry& g, std::mt19937_64& rng) {
  const auto [kind, k, s, pad] = g;
  std::uniform_int_distribution<std::size_t> ch(1, 3), extra(0, 9);
  FdStats st;
  if (kind == LayerKind::conv1d) {
    const std::size_t ci = ch(rng), co = ch(rng), L = k + 2 * s + extra(rng);
    auto x = random_tensor<double>({ci, L}, rng);
    auto w = random_tensor<double>({co, ci, k}, rng);
    auto b = random_tensor<double>({co}, rng);
    const auto r = random_tensor<double>(conv1d_forward(x, w, b, s, pad).shape(), rng);
    const auto grads = conv1d_backward(x, Conv1DParams<double>{w, b, s, pad}, r);
    auto loss = [&] { return dot(r, conv1d_forward(x, w, b, s, pad)); };
    st.merge(fd_all(loss, x, grads.grad_x));
    st.merge(fd_all(loss, w, grads.grad_w));
    st.merge(fd_all(loss, b, grads.grad_b));
  } else if (kind == LayerKind::conv2d) {
    const std::size_t ci = ch(rng), co = ch(rng);
    const std::size_t H = k + s + extra(rng) % 4, W = k + s + extra(rng) % 5;
    auto x = random_tensor<double>({ci, H, W}, rng);
    auto w = random_tensor<double>({co, ci, k, k}, rng);
    auto b = random_tensor<double>({co}, rng);
    const auto r = random_tensor<double>(conv2d_forward(x, w, b, s, pad).shape(), rng);
    const auto grads = conv2d_backward(x, Conv2DParams<double>{w, b, s, pad}, r);
    auto loss = [&] { return dot(r, conv2d_forward(x, w, b, s, pad)); };
    st.merge(fd_all(loss, x, grads.grad_x));
    st.merge(fd_all(loss, w, grads.grad_w));
    st.merge(fd_all(loss, b, grads.grad_b));
  } else if (kind == LayerKind::maxpool1d) {
    auto x = random_tensor<double>({ch(rng), k + 3 * s + extra(rng)}, rng);
    const auto p = maxpool1d_forward(x, k, s);
    const auto r = random_tensor<double>(p.out.shape(), rng);
    st.merge(fd_all([&] { return dot(r, maxpool1d_forward(x, k, s).out); }, x,
                    maxpool_backward<double>(x.shape(), p.argmax, r)));
  } else {
    auto x = random_tensor<double>({ch(rng), k + 2 * s + extra(rng) % 3, k + 2 * s + extra(rng) % 4}, rng);
    const auto p = maxpool2d_forward(x, k, s);
    const auto r = random_tensor<double>(p.out.shape(), rng);
    st.merge(fd_all([&] { return dot(r, maxpool2d_forward(x, k, s).out); }, x,
                    maxpool_backward<double>(x.shape(), p.argmax, r)));
  }
  return st;
}

std::map<std::string, FdStats> check_pointwise_ops(std::mt19937_64& rng) {
  std::map<std::string, FdStats> out;
  {
    auto x = random_tensor<double>({3, 17}, rng);
    const auto r = random_tensor<double>(x.shape(), rng);
    out["relu"].merge(fd_all([&] { return dot(r, relu_forward(x)); }, x, relu_backward(x, r)));
  }
  {
    auto a = random_tensor<double>({3, 4, 5}, rng);
    const auto r = random_tensor<double>({3}, rng);
    out["gap"].merge(fd_all([&] { return dot(r, gap_forward(a)); }, a, gap_backward<double>(a.shape(), r)));
  }
  for (BnMode mode : {BnMode::train, BnMode::infer}) {
    BatchNormState<double> s;
    s.gamma = random_tensor<double>({3}, rng, 0.5, 1.5);
    s.beta = random_tensor<double>({3}, rng);
    s.running_mean = random_tensor<double>({3}, rng);
    s.running_var = random_tensor<double>({3}, rng, 0.5, 2.0);
    s.mode = mode;
    s.stats_initialized = true;
    std::vector<Tensor<double>> batch, r;
    for (int n = 0; n < 4; ++n) {
      batch.push_back(random_tensor<double>({3, 6}, rng));
      r.push_back(random_tensor<double>({3, 6}, rng));
    }
    auto loss = [&] {
      const auto f = batchnorm_forward<double>(batch, s);
      double sum = 0.0;
      for (std::size_t n = 0; n < batch.size(); ++n) sum += dot(r[n], f.out[n]);
      return sum;
    };
    const auto f = batchnorm_forward<double>(batch, s);
    const auto g = batchnorm_backward<double>(batch, s, f.mean, f.var, r);
    const std::string name = mode == BnMode::train ? "batchnorm(train)" : "batchnorm(infer)";
    for (std::size_t n = 0; n < batch.size(); ++n) out[name].merge(fd_all(loss, batch[n], g.grad_x[n]));
    out[name].merge(fd_all(loss, s.gamma, g.grad_gamma));
    out[name].merge(fd_all(loss, s.beta, g.grad_beta));
  }
  {
    auto z = random_tensor<double>({10}, rng, -3, 3);
    const auto r = random_tensor<double>({10}, rng);
    out["softmax"].merge(fd_all([&] { return dot(r, softmax(z)); }, z, softmax_backward(softmax(z), r)));
    const std::size_t label = rng() % 10;
    out["softmax_xent"].merge(
        fd_all([&] { return softmax_xent(z, label).loss; }, z, softmax_xent(z, label).grad_logits));
  }
  return out;
}

double batch_loss(Model<double>& m, const Batch<double>& xs, const std::vector<std::size_t>& ys) {
  const ForwardResult<double> r = m.forward(xs, Mode::train);
  double loss = 0.0;
  for (std::size_t n = 0; n < xs.size(); ++n) loss += softmax_xent(r.logits[n], ys[n]).loss;
  return loss / static_cast<double>(xs.size());
}

FdStats check_network(const std::string& arch, std::uint64_t seed, std::size_t samples) {
  Model<double> m(make_config(arch, 4), seed);
  std::mt19937_64 rng(seed * 104729 + 1);
  Batch<double> xs;
  std::vector<std::size_t> ys;
  for (std::size_t n = 0; n < 3; ++n) {
    xs.push_back(random_tensor<double>({1, 512}, rng));
    ys.push_back(rng() % 4);
  }
  ForwardResult<double> r = m.forward(xs, Mode::train);
  Batch<double> g;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    Tensor<double> gl = softmax_xent(r.logits[n], ys[n]).grad_logits;
    for (double& v : gl.values()) v /= static_cast<double>(xs.size());
    g.push_back(std::move(gl));
  }
  m.backward_from_logits(r.tape, g);
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    if (!m.params()[i].trainable) continue;
    for (std::size_t k = 0; k < m.params()[i].value.size(); ++k) slots.emplace_back(i, k);
  }
  std::shuffle(slots.begin(), slots.end(), rng);
  auto loss = [&] { return batch_loss(m, xs, ys); };
  FdStats st;
  for (const auto& [i, k] : slots) {
    if (st.checked == samples) break;
    const auto numeric = smooth_central_difference(loss, m.params()[i].value[k]);
    if (!numeric) {
      ++st.skipped;
      continue;
    }
    ++st.checked;
    st.worst = std::max(st.worst, rel_error(m.params()[i].grad[k], *numeric));
  }
  return st;
}

Outcome criterion_gradients() {
  constexpr double kTol = 1e-4;
  constexpr int kSeeds = 5;
  std::set<Geometry> geoms;
  for (const std::string& arch : arch_names()) collect_geometry(make_config(arch).layers, geoms);

  bool ok = true;
  std::ostringstream detail;
  FdStats ops;
  double worst_op = 0.0;
  std::string worst_name;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    for (const Geometry& g : geoms) {
      const FdStats s = check_geometry(g, rng);
      if (s.worst > worst_op) {
        worst_op = s.worst;
        worst_name = std::string(to_string(std::get<0>(g))) + " k" + std::to_string(std::get<1>(g)) +
                     " s" + std::to_string(std::get<2>(g));
      }
      ops.merge(s);
    }
    for (const auto& [name, s] : check_pointwise_ops(rng)) {
      if (s.worst > worst_op) {
        worst_op = s.worst;
        worst_name = name;
      }
      if (s.checked == 0) ok = false;
      ops.merge(s);
    }
  }
  ok = ok && ops.worst < kTol;
  detail << geoms.size() << " conv/pool geometries + relu/gap/bn/softmax/xent x " << kSeeds
         << " seeds: " << ops.checked << " elements, worst rel " << fmt(worst_op, 3) << " (" << worst_name
         << ")";

  for (const std::string& arch : test_arch_names()) {
    FdStats net;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const FdStats s = check_network(arch, seed, 60);
      ok = ok && s.checked >= 50 && s.worst < kTol;
      net.merge(s);
    }
    detail << "; " << arch << " L=512: " << net.checked << " params over " << kSeeds
           << " seeds, worst rel " << fmt(net.worst, 3) << ", " << net.skipped << " kink points resampled";
  }
  return {ok, detail.str()};
}

// ---------------------------------------------------------------- 3

Outcome criterion_overfit() {
  const auto data = synth_dataset(4, 10, 1, 512);
  Model<float> m(make_config("inception_mini", 4), 1);
  const double initial = evaluate(m, data).mean_loss;
  TrainConfig c;
  c.max_epochs = 200;
  c.seed = 1;
  c.patience = 0;
  std::size_t reached = 0;
  train(m, data, c, [&](const EpochReport& r, const Model<float>& model, const AdamState<float>&) {
    if (r.train_accuracy == 1.0 && evaluate(model, data).accuracy == 1.0) reached = r.epoch;
    return reached == 0;
  });
  const bool ok = reached > 0 && std::abs(initial - std::log(4.0)) <= 0.2;
  return {ok, "initial loss " + fmt(initial) + " (ln 4 = " + fmt(std::log(4.0)) + "), " +
                  (reached ? "100% train accuracy at epoch " + std::to_string(reached)
                           : std::string("never reached 100% in 200 epochs"))};
}

// ---------------------------------------------------------------- 4

constexpr std::size_t kA4Length = 4000;
constexpr std::size_t kA4Epochs = 20;

Outcome criterion_generalization(const fs::path& work) {
  const auto train_set = synth_dataset(4, 100, 401, kA4Length);
  const auto test_set = synth_dataset(4, 25, 402, kA4Length);
  Model<float> m(make_config("inception", 4), 4);
  TrainConfig c;
  c.max_epochs = kA4Epochs;
  c.seed = 4;
  std::ofstream log(work / "a4_epochs.tsv");
  log << "epoch\ttrain_loss\ttrain_accuracy\ttest_accuracy\tseconds\n";
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = train(m, train_set, c, [&](const EpochReport& e, const Model<float>&, const AdamState<float>&) {
    log << e.epoch << "\t" << e.train_loss << "\t" << e.train_accuracy << "\t" << e.test_accuracy.value_or(-1)
        << "\t" << e.wall_seconds << "\n" << std::flush;
    return true;
  }, &test_set);
  const double minutes = seconds_since(t0) / 60.0;
  save_checkpoint(work / "a4.inuc", m);
  const EvalResult ev = evaluate(m, test_set);
  return {ev.accuracy >= 0.9 && minutes < 60.0,
          "inception, 400 train / 100 held-out synthetic clips of " + std::to_string(kA4Length) +
              " samples, " + std::to_string(r.reports.size()) + " epochs: held-out accuracy " +
              fmt(ev.accuracy * 100, 4) + "% (train " + fmt(r.reports.back().train_accuracy * 100, 4) +
              "%) in " + fmt(minutes, 3) + " min"};
}

// ---------------------------------------------------------------- 5, 6, 7

// Shared 10-class synthetic corpus and trained checkpoints.
struct Corpus {
  fs::path root;
  std::string manifest() const { return (root / "manifest.csv").string(); }
};

Corpus make_corpus(const fs::path& work) {
  Corpus c{work / "corpus"};
  if (!fs::exists(c.root / "manifest.csv")) {
    const CliRun r = cli({"synth-data", "--out", c.root.string(), "--classes", "10", "--per-class", "3",
                          "--length", "4000", "--folds", "3", "--seed", "5"});
    if (r.code != 0) throw Error("synth-data failed: " + r.err);
  }
  return c;
}

CliRun train_run(const Corpus& c, const std::string& arch, const fs::path& out, std::uint64_t seed) {
  return cli({"train", "--arch", arch, "--manifest", c.manifest(), "--test-folds", "3", "--epochs", "2",
              "--batch-size", "8", "--target-len", "4000", "--seed", std::to_string(seed), "--out",
              out.string()});
}

bool is_distribution(const Tensor<float>& p, std::size_t classes) {
  if (p.shape() != Shape{classes}) return false;
  double sum = 0.0;
  for (float v : p.values()) {
    if (!(v >= 0.0f) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) < 1e-5;
}

Outcome criterion_variable_length(const fs::path& work) {
  const Corpus c = make_corpus(work);
  const fs::path run = work / "a5_run";
  const CliRun t = train_run(c, "inception", run, 11);
  if (t.code != 0) return {false, "training the checkpoint failed: " + last_line(t.err)};
  const Model<float> m = load_checkpoint(run / "last.inuc").model();
  std::mt19937_64 rng(5);
  std::ostringstream d;
  bool ok = true;
  for (std::size_t L : {16000u, 32000u}) {
    const bool good = is_distribution(m.predict(prepare(synth_signal(2, 77, 0, L, 8000), L)), 10) &&
                      is_distribution(m.predict(random_tensor<float>({1, L}, rng)), 10);
    ok = ok && good;
    d << "L=" << L << " -> (10,) " << (good ? "ok" : "BAD") << "; ";
  }
  const std::size_t min_len = m.min_input_length();
  const bool at_min = is_distribution(m.predict(random_tensor<float>({1, min_len}, rng)), 10);
  std::string message;
  try {
    m.predict(random_tensor<float>({1, min_len - 1}, rng));
  } catch (const ShapeError& e) {
    message = e.what();
  }
  const bool informative = message.find("minimum input length " + std::to_string(min_len)) != std::string::npos;
  // The same contract through the command line with a 2-second WAV.
  const fs::path wav = work / "two_seconds.wav";
  write_wav(wav, synth_signal(4, 78, 0, 16000, 8000), 8000);
  const CliRun p = cli({"predict", "--checkpoint", (run / "last.inuc").string(), "--wav", wav.string()});
  std::size_t rows = 0;
  for (char ch : p.out) rows += ch == '\n';
  ok = ok && at_min && informative && p.code == 0 && rows == 10;
  d << "L=" << min_len << " (computed minimum) " << (at_min ? "ok" : "BAD") << "; L=" << min_len - 1
    << " -> \"" << message << "\"; CLI predict on 2 s WAV exit " << p.code << ", " << rows << " classes";
  return {ok, d.str()};
}

Outcome criterion_determinism(const fs::path& work) {
  const Corpus c = make_corpus(work);
  std::ostringstream d;
  bool ok = true;
  for (const std::string arch : {"inception", "inception_bn"}) {
    const fs::path a = work / ("a6_" + arch + "_a"), b = work / ("a6_" + arch + "_b"),
                   other = work / ("a6_" + arch + "_other");
    const CliRun ra = train_run(c, arch, a, 7), rb = train_run(c, arch, b, 7), ro = train_run(c, arch, other, 8);
    if (ra.code || rb.code || ro.code) return {false, arch + " training failed: " + last_line(ra.err + rb.err + ro.err)};
    const bool same_ck = slurp(a / "last.inuc") == slurp(b / "last.inuc") &&
                         slurp(a / "best.inuc") == slurp(b / "best.inuc");
    const bool same_log = slurp(a / "loss_log.tsv") == slurp(b / "loss_log.tsv");
    const bool differs = slurp(a / "last.inuc") != slurp(other / "last.inuc");
    ok = ok && same_ck && same_log && differs;
    d << arch << ": checkpoints " << (same_ck ? "identical" : "DIFFER") << ", loss logs "
      << (same_log ? "identical" : "DIFFER") << ", seed 8 " << (differs ? "differs" : "IDENTICAL") << "; ";
  }
  d << "single-threaded, 2 epochs, seed 7 twice";
  return {ok, d.str()};
}

Outcome criterion_checkpoint_roundtrip(const fs::path& work) {
  const Corpus c = make_corpus(work);
  std::ostringstream d;
  bool ok = true;
  for (const std::string arch : {"inception", "inception_bn"}) {
    const fs::path run = work / ("a7_" + arch);
    const CliRun t = train_run(c, arch, run, 3);
    if (t.code != 0) return {false, arch + " training failed: " + last_line(t.err)};
    const Checkpoint ck = load_checkpoint(run / "last.inuc");
    const Model<float> before = ck.model();
    const fs::path copy = work / ("a7_" + arch + "_copy.inuc");
    save_checkpoint(copy, before, ck.optimizer ? &*ck.optimizer : nullptr, ck.meta);
    const Model<float> after = load_checkpoint(copy).model();
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> len(before.min_input_length(), 32000);
    std::size_t same = 0;
    for (int i = 0; i < 20; ++i) {
      const auto x = random_tensor<float>({1, len(rng)}, rng, -3, 3);
      same += bitwise_equal(before.predict(x), after.predict(x));
    }
    const bool bytes = slurp(run / "last.inuc") == slurp(copy);
    ok = ok && same == 20 && bytes;
    d << arch << ": " << same << "/20 forwards bitwise equal, re-saved file "
      << (bytes ? "byte-identical" : "DIFFERS") << "; ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 8

std::vector<float> tone(double hz, std::uint32_t rate, std::size_t n) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / rate));
  }
  return x;
}

double correlation(const std::vector<float>& a, const std::vector<float>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0, mb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Outcome criterion_preprocessing(const fs::path& work) {
  // Clips at assorted rates and lengths go through the full WAV -> resample -> prepare path.
  std::mt19937_64 rng(8);
  const std::uint32_t rates[] = {8000, 16000, 22050, 44100, 48000};
  double worst_mean = 0.0, worst_std = 0.0;
  std::size_t clips = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::uint32_t rate = rates[i % 5];
    const std::size_t n = 1000 + rng() % (5 * rate);
    std::vector<float> x = synth_signal(i % 10, 80, i, n, rate);
    float peak = 0.0f;
    for (float v : x) peak = std::max(peak, std::abs(v));
    for (float& v : x) v = 0.9f * v / peak;
    const fs::path wav = work / "a8.wav";
    write_wav(wav, x, rate, 16);
    const Audio a = read_wav(wav);
    const Tensor<float> p = prepare(resample(a.samples, a.sample_rate, kTargetRate));
    double m = 0.0, v = 0.0;
    for (float s : p.values()) m += s;
    m /= p.size();
    for (float s : p.values()) v += (s - m) * (s - m);
    worst_mean = std::max(worst_mean, std::abs(m));
    worst_std = std::max(worst_std, std::abs(std::sqrt(v / p.size()) - 1.0));
    ++clips;
  }
  std::ostringstream d;
  d << clips << " clips: max |mean| " << fmt(worst_mean, 3) << ", max |std-1| " << fmt(worst_std, 3);
  bool ok = worst_mean < 1e-4 && worst_std < 1e-3;
  for (std::uint32_t from : {44100u, 22050u, 48000u, 16000u}) {
    const double r = correlation(resample(tone(100, from, from), from, 8000), tone(100, 8000, 8000));
    ok = ok && r > 0.999;
    d << "; 100 Hz tone " << from << "->8000 corr " << fmt(r, 7);
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 9

const char* const kUs8kClasses[] = {"air_conditioner", "car_horn",     "children_playing", "dog_bark",
                                    "drilling",        "engine_idling", "gun_shot",         "jackhammer",
                                    "siren",           "street_music"};

// UrbanSound8K-shaped manifest (8732 rows, 10 folds) with audio only for the 1% subsample.
std::string write_us8k(const fs::path& root, std::uint64_t seed) {
  fs::create_directories(root);
  static const int per_fold[] = {873, 888, 925, 990, 936, 823, 838, 806, 816, 837};
  std::string csv = "slice_file_name,fsID,start,end,salience,fold,classID,class\n";
  std::size_t row = 0;
  for (int fold = 1; fold <= 10; ++fold) {
    for (int i = 0; i < per_fold[fold - 1]; ++i, ++row) {
      const std::size_t c = (row * 7 + static_cast<std::size_t>(fold)) % 10;
      csv += std::to_string(100000 + row) + "-" + std::to_string(c) + "-0-" + std::to_string(i) + ".wav," +
             std::to_string(100000 + row) + ",0.0,4.0,1," + std::to_string(fold) + "," + std::to_string(c) +
             "," + kUs8kClasses[c] + "\n";
    }
  }
  const fs::path manifest = root / "UrbanSound8K.csv";
  std::ofstream(manifest) << csv;
  const Manifest picked = subsample(read_manifest(manifest), 0.01, seed);
  const std::uint32_t rates[] = {44100, 48000, 22050, 16000};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < picked.rows.size(); ++i) {
    const ManifestRow& r = picked.rows[i];
    const std::uint32_t rate = rates[i % 4];
    const std::size_t n = rate / 2 + rng() % (rate * 7 / 2);  // 0.5 to 4 s
    std::vector<float> x = synth_signal(r.class_id, seed, i, n, rate);
    float peak = 0.0f;
    for (float v : x) peak = std::max(peak, std::abs(v));
    for (float& v : x) v = 0.8f * v / peak;
    const fs::path dir = root / "audio" / ("fold" + std::to_string(r.fold));
    fs::create_directories(dir);
    write_wav(dir / r.file_name, x, rate, 16);
  }
  return manifest.string();
}

Outcome criterion_headline_harness(const fs::path& work) {
  const std::uint64_t seed = 9;
  const fs::path root = work / "us8k";
  const std::string manifest = write_us8k(root, seed);
  const fs::path out = work / "a9_run";
  const auto t0 = std::chrono::steady_clock::now();
  const CliRun r = cli({"train", "--arch", "inception", "--manifest", manifest, "--test-folds", "10", "--epochs",
                        "10", "--subsample", "0.01", "--seed", std::to_string(seed), "--out", out.string()});
  const double minutes = seconds_since(t0) / 60.0;
  if (r.code != 0) return {false, "harness exit " + std::to_string(r.code) + ": " + last_line(r.err)};
  std::vector<double> loss;
  std::istringstream in(slurp(out / "loss_log.tsv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto tab1 = line.find('\t'), tab2 = line.find('\t', tab1 + 1);
    loss.push_back(std::stod(line.substr(tab1 + 1, tab2 - tab1 - 1)));
  }
  // Least-squares slope of loss against epoch.
  const double n = static_cast<double>(loss.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    sx += i;
    sy += loss[i];
    sxx += double(i) * i;
    sxy += i * loss[i];
  }
  const double slope = loss.size() > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  bool finite = true;
  for (double v : loss) finite = finite && std::isfinite(v);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  const std::size_t clips = summary.at("train_clips").get<std::size_t>();
  const bool ok = loss.size() == 10 && finite && slope < 0.0 && loss.back() < loss.front();
  std::ostringstream d;
  d << "8732-row manifest, 1% subsample = " << clips + summary.at("test_clips").get<std::size_t>() << " clips ("
    << clips << " train), 10 epochs in " << fmt(minutes, 3)
    << " min: loss " << fmt(loss.empty() ? 0 : loss.front()) << " -> " << fmt(loss.empty() ? 0 : loss.back())
    << ", slope " << fmt(slope, 3) << "/epoch; the 88.4% figure itself needs the full corpus and ~300 epochs";
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"Acceptance checks"};
  std::string work_dir;
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory")->required();
  app.add_option("--only", only, "Run just these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path work = work_dir;
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "parameter counts", [] { return criterion_param_counts(); }},
      {2, "gradient correctness", [] { return criterion_gradients(); }},
      {3, "overfit capability", [] { return criterion_overfit(); }},
      {4, "generalization sanity", [&] { return criterion_generalization(work); }},
      {5, "variable-length contract", [&] { return criterion_variable_length(work); }},
      {6, "determinism", [&] { return criterion_determinism(work); }},
      {7, "checkpoint round-trip", [&] { return criterion_checkpoint_roundtrip(work); }},
      {8, "preprocessing fidelity", [&] { return criterion_preprocessing(work); }},
      {9, "headline harness on 1% subsample", [&] { return criterion_headline_harness(work); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << " [" << fmt(seconds_since(t0), 4)
              << " s]: " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
