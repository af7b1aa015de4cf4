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

#include "inucleus/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "inucleus/analysis.hpp"
#include "inucleus/audio.hpp"
#include "inucleus/checkpoint.hpp"
#include "inucleus/errors.hpp"
#include "inucleus/model.hpp"
#include "inucleus/train.hpp"

namespace inucleus {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TrainOpts {
  std::string arch = "inception";
  std::string data_dir;
  std::string manifest;
  std::vector<int> test_folds{10};
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lambda = 1e-4;
  std::uint64_t seed = 0;
  std::string out = "run";
  std::size_t num_classes = 0;
  double subsample = 1.0;
  std::size_t target_len = kTargetLength;
  std::size_t patience = 20;
  double min_delta = 1e-4;
  std::size_t micro_batch = 0;
  std::size_t pool1d_stride = 0;
  std::size_t checkpoint_every = 0;
};

struct EvalOpts {
  std::string checkpoint;
  std::string manifest;
  std::string data_dir;
  std::vector<int> test_folds;
  std::size_t target_len = kTargetLength;
  std::size_t batch_size = 4;
};

struct PredictOpts {
  std::string checkpoint;
  std::string wav;
  std::size_t top_k = 0;
  std::size_t target_len = 0;
};

struct CountOpts {
  std::string arch = "inception";
  bool include_non_trainable = false;
  std::size_t num_classes = 10;
};

struct FilterOpts {
  std::string checkpoint;
  std::string layer;
  std::string out = "-";
};

struct EmbedOpts {
  std::string checkpoint;
  std::string manifest;
  std::string data_dir;
  std::string out = "-";
  std::size_t target_len = kTargetLength;
  std::size_t batch_size = 4;
};

struct SynthOpts {
  std::string out;
  std::size_t classes = 10;
  std::size_t per_class = 10;
  std::uint64_t seed = 0;
  std::size_t length = kTargetLength;
  std::uint32_t rate = kTargetRate;
  int folds = 10;
};

fs::path data_dir_for(const std::string& data_dir, const std::string& manifest) {
  if (!data_dir.empty()) return data_dir;
  const fs::path parent = fs::path(manifest).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

// Writes to `path`, or to `out` when path is "-".
void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
}

Manifest load_manifest(const std::string& path) {
  if (path.empty()) throw ConfigError("--manifest is required");
  if (!fs::exists(path)) throw IoError("manifest '" + path + "' does not exist");
  return read_manifest(path);
}

std::string class_name(const std::vector<std::string>& names, std::size_t i) {
  return i < names.size() ? names[i] : "class" + std::to_string(i);
}

json confusion_json(const EvalResult& r) {
  json rows = json::array();
  for (const auto& row : r.confusion) rows.push_back(row);
  return rows;
}

int cmd_train(const TrainOpts& o, std::ostream& out, std::ostream& err) {
  Manifest manifest = load_manifest(o.manifest);
  if (o.subsample < 1.0) manifest = subsample(manifest, o.subsample, o.seed);
  const std::set<int> folds(o.test_folds.begin(), o.test_folds.end());
  auto [train_rows, test_rows] = make_splits(manifest, folds, o.seed);
  if (train_rows.empty()) throw ConfigError("no training rows outside the test folds");

  const std::size_t classes = o.num_classes ? o.num_classes : manifest.num_classes();
  if (classes < manifest.num_classes()) {
    throw ConfigError("--num-classes " + std::to_string(classes) + " is below the manifest's " +
                      std::to_string(manifest.num_classes()) + " classes");
  }
  ModelConfig config = make_config(o.arch, classes);
  if (o.pool1d_stride) {
    for (LayerSpec& s : config.layers) {
      if (s.kind == LayerKind::maxpool1d) s.stride = o.pool1d_stride;
    }
  }
  Model<float> model(config, o.seed);
  if (o.target_len < model.min_input_length()) {
    throw ConfigError("--target-len " + std::to_string(o.target_len) +
                      " is below the minimum input length " +
                      std::to_string(model.min_input_length()));
  }

  const fs::path data_dir = data_dir_for(o.data_dir, o.manifest);
  err << "loading " << train_rows.size() << " training and " << test_rows.size()
      << " test clips from " << data_dir.string() << "\n";
  const std::vector<Sample> train_set = load_samples(train_rows, data_dir, o.target_len);
  const std::vector<Sample> test_set = load_samples(test_rows, data_dir, o.target_len);

  const fs::path out_dir = o.out;
  fs::create_directories(out_dir);
  std::ofstream log(out_dir / "train_log.jsonl", std::ios::trunc);
  std::ofstream losses(out_dir / "loss_log.tsv", std::ios::trunc);
  if (!log || !losses) throw IoError("cannot write logs under '" + out_dir.string() + "'");
  losses << "epoch\ttrain_loss\ttrain_accuracy\n";

  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.max_epochs = o.epochs;
  tc.seed = o.seed ^ 0x9E3779B97F4A7C15ULL;
  tc.lr = o.lr;
  tc.beta1 = o.beta1;
  tc.beta2 = o.beta2;
  tc.eps = o.eps;
  tc.lambda = o.lambda;
  tc.patience = o.patience;
  tc.min_delta = o.min_delta;
  tc.micro_batch = o.micro_batch;

  std::vector<EpochReport> history;
  double best = std::numeric_limits<double>::infinity();
  auto meta_for = [&](std::size_t epoch) {
    return CheckpointMeta{epoch, o.seed, loss_digest(history), manifest.class_names};
  };
  const EpochSink sink = [&](const EpochReport& r, const Model<float>& m,
                             const AdamState<float>& adam) {
    history.push_back(r);
    json line{{"epoch", r.epoch},         {"train_loss", r.train_loss},
              {"train_accuracy", r.train_accuracy}, {"steps", r.steps},
              {"wall_seconds", r.wall_seconds}};
    line["test_accuracy"] = r.test_accuracy ? json(*r.test_accuracy) : json(nullptr);
    log << line.dump() << "\n" << std::flush;
    losses << r.epoch << "\t" << format_float(static_cast<float>(r.train_loss)) << "\t"
           << format_float(static_cast<float>(r.train_accuracy)) << "\n"
           << std::flush;
    err << "epoch " << r.epoch << " loss " << r.train_loss << " acc " << r.train_accuracy;
    if (r.test_accuracy) err << " test_acc " << *r.test_accuracy;
    err << " (" << r.wall_seconds << " s)\n";
    save_checkpoint(out_dir / "last.inuc", m, &adam, meta_for(r.epoch));
    if (r.train_loss < best) {
      best = r.train_loss;
      save_checkpoint(out_dir / "best.inuc", m, &adam, meta_for(r.epoch));
    }
    if (o.checkpoint_every && r.epoch % o.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.inuc", r.epoch);
      save_checkpoint(out_dir / name, m, &adam, meta_for(r.epoch));
    }
    return true;
  };
  const TrainResult result = train(model, train_set, tc, sink, &test_set);

  json summary{{"arch", o.arch},
               {"epochs_run", result.reports.size()},
               {"converged", result.converged},
               {"final_train_loss", result.reports.back().train_loss},
               {"final_train_accuracy", result.reports.back().train_accuracy},
               {"loss_digest", loss_digest(result.reports)},
               {"train_clips", train_set.size()},
               {"test_clips", test_set.size()}};
  if (!test_set.empty()) {
    const EvalResult ev = evaluate(model, test_set);
    summary["test_accuracy"] = ev.accuracy;
    summary["test_loss"] = ev.mean_loss;
    summary["confusion"] = confusion_json(ev);
  }
  emit((out_dir / "summary.json").string(), out, summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOpts& o, std::ostream& out, std::ostream&) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const Model<float> model = ck.model();
  const Manifest manifest = load_manifest(o.manifest);
  std::vector<ManifestRow> rows;
  const std::set<int> folds(o.test_folds.begin(), o.test_folds.end());
  for (const ManifestRow& r : manifest.rows) {
    if (folds.empty() || folds.count(r.fold)) rows.push_back(r);
  }
  if (rows.empty()) throw ConfigError("no manifest rows in the selected folds");
  const auto samples = load_samples(rows, data_dir_for(o.data_dir, o.manifest), o.target_len);
  const EvalResult r = evaluate(model, samples, o.batch_size);
  out << json{{"accuracy", r.accuracy},
              {"mean_loss", r.mean_loss},
              {"count", r.count},
              {"confusion", confusion_json(r)}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_predict(const PredictOpts& o, std::ostream& out, std::ostream&) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const Model<float> model = ck.model();
  const Audio audio = read_wav(o.wav);
  if (audio.samples.empty()) throw ParseError("'" + o.wav + "' holds no samples");
  const std::vector<float> x = resample(audio.samples, audio.sample_rate, kTargetRate);
  const Tensor<float> input = o.target_len ? prepare(x, o.target_len) : standardize(x);
  const Tensor<float> probs = model.predict(input);
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  const std::size_t k = o.top_k ? std::min(o.top_k, order.size()) : order.size();
  for (std::size_t i = 0; i < k; ++i) {
    out << i + 1 << "\t" << order[i] << "\t" << class_name(ck.meta.class_names, order[i]) << "\t"
        << format_float(probs[order[i]]) << "\n";
  }
  return kExitOk;
}

int cmd_count(const CountOpts& o, std::ostream& out, std::ostream& err) {
  const Model<float> model(make_config(o.arch, o.num_classes), 0);
  const std::size_t trainable = model.count_params(false);
  const std::size_t total = model.count_params(true);
  const std::size_t count = o.include_non_trainable ? total : trainable;
  out << "arch\t" << o.arch << "\n"
      << "trainable\t" << trainable << "\n"
      << "total\t" << total << "\n"
      << "count\t" << count << "\n";
  if (const auto expected = model.config().expected_param_count) {
    // Published sizes count batch-norm running statistics.
    if (!matches_published_count(total, *expected)) {
      err << "warning: " << o.arch << " has " << total << " parameters, published size is "
          << *expected / 1000 << "K\n";
    }
  }
  return kExitOk;
}

int cmd_export_filters(const FilterOpts& o, std::ostream& out, std::ostream&) {
  const Model<float> model = load_checkpoint(o.checkpoint).model();
  emit(o.out, out, filters_csv(filter_weights(model, o.layer).value));
  return kExitOk;
}

int cmd_export_embeddings(const EmbedOpts& o, std::ostream& out, std::ostream&) {
  if (o.batch_size < 1) throw ConfigError("--batch-size must be >= 1");
  const Model<float> model = load_checkpoint(o.checkpoint).model();
  const Manifest manifest = load_manifest(o.manifest);
  const fs::path data_dir = data_dir_for(o.data_dir, o.manifest);
  std::string text;
  for (std::size_t start = 0; start < manifest.rows.size(); start += o.batch_size) {
    const std::size_t end = std::min(manifest.rows.size(), start + o.batch_size);
    const std::vector<ManifestRow> rows(manifest.rows.begin() + start, manifest.rows.begin() + end);
    const std::vector<Sample> samples = load_samples(rows, data_dir, o.target_len);
    Batch<float> inputs;
    for (const Sample& s : samples) inputs.push_back(s.waveform);
    const Batch<float> features = model.features(inputs);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      text += embedding_row(samples[i].source_id, samples[i].label, features[i]);
    }
  }
  emit(o.out, out, text);
  return kExitOk;
}

int cmd_synth(const SynthOpts& o, std::ostream& out, std::ostream&) {
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.folds < 1) throw ConfigError("--folds must be >= 1");
  if (o.classes < 1 || o.classes > synth_class_names().size()) {
    throw ConfigError("--classes must be in 1.." + std::to_string(synth_class_names().size()));
  }
  const fs::path root = o.out;
  Manifest m;
  m.class_names.assign(synth_class_names().begin(), synth_class_names().begin() + o.classes);
  for (std::size_t c = 0; c < o.classes; ++c) {
    for (std::size_t i = 0; i < o.per_class; ++i) {
      ManifestRow r;
      r.fold = static_cast<int>(i % static_cast<std::size_t>(o.folds)) + 1;
      r.class_id = c;
      r.class_name = m.class_names[c];
      r.file_name = r.class_name + "_" + std::to_string(i) + ".wav";
      const fs::path dir = root / ("fold" + std::to_string(r.fold));
      fs::create_directories(dir);
      write_wav(dir / r.file_name, synth_signal(c, o.seed, i, o.length, o.rate), o.rate, 32);
      m.rows.push_back(std::move(r));
    }
  }
  emit((root / "manifest.csv").string(), out, format_manifest(m));
  out << "wrote " << m.rows.size() << " clips and " << (root / "manifest.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Raw-waveform sound classification with inception nucleus networks", "inucleus"};
  app.require_subcommand(1);

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network on a manifest of WAV clips");
  train_cmd->add_option("--arch", tr.arch, "Architecture name")->capture_default_str();
  train_cmd->add_option("--data-dir", tr.data_dir, "Clip root (default: manifest directory)");
  train_cmd->add_option("--manifest", tr.manifest, "Manifest CSV")->required();
  train_cmd->add_option("--test-folds", tr.test_folds, "Folds held out for testing")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--beta1", tr.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", tr.beta2)->capture_default_str();
  train_cmd->add_option("--eps", tr.eps)->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "L2 coefficient")->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Output directory")->capture_default_str();
  train_cmd->add_option("--num-classes", tr.num_classes, "Default: classes in the manifest");
  train_cmd->add_option("--subsample", tr.subsample, "Fraction of manifest rows to use")
      ->capture_default_str();
  train_cmd->add_option("--target-len", tr.target_len, "Samples per clip after padding")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--patience", tr.patience, "Epochs without improvement; 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--min-delta", tr.min_delta)->capture_default_str();
  train_cmd->add_option("--micro-batch", tr.micro_batch, "Clips per forward pass; 0 = auto")
      ->capture_default_str();
  train_cmd->add_option("--pool1d-stride", tr.pool1d_stride, "Override the 1D max-pool stride");
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Keep every N-th epoch");

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on manifest clips");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  eval_cmd->add_option("--data-dir", ev.data_dir);
  eval_cmd->add_option("--test-folds", ev.test_folds, "Folds to evaluate (default: all)")->delimiter(',');
  eval_cmd->add_option("--target-len", ev.target_len)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--batch-size", ev.batch_size)->capture_default_str()->check(CLI::PositiveNumber);

  PredictOpts pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one WAV file");
  predict_cmd->add_option("--checkpoint", pr.checkpoint)->required();
  predict_cmd->add_option("--wav", pr.wav)->required();
  predict_cmd->add_option("--top-k", pr.top_k, "Classes to print; 0 = all")->capture_default_str();
  predict_cmd->add_option("--target-len", pr.target_len, "Pad/truncate first; 0 keeps the length")
      ->capture_default_str();

  CountOpts co;
  auto* count_cmd = app.add_subcommand("count-params", "Print parameter counts");
  count_cmd->add_option("--arch", co.arch)->capture_default_str();
  count_cmd->add_flag("--include-non-trainable", co.include_non_trainable,
                      "Report the total including batch-norm running statistics");
  count_cmd->add_option("--num-classes", co.num_classes)->capture_default_str()->check(CLI::PositiveNumber);

  FilterOpts fo;
  auto* filters_cmd = app.add_subcommand("export-filters", "Dump convolution kernels as CSV");
  filters_cmd->add_option("--checkpoint", fo.checkpoint)->required();
  filters_cmd->add_option("--layer", fo.layer, "Layer name or index (default: first conv)");
  filters_cmd->add_option("--out", fo.out, "Output file, - for stdout")->capture_default_str();

  EmbedOpts eo;
  auto* embed_cmd = app.add_subcommand("export-embeddings", "Dump pre-GAP activations as TSV");
  embed_cmd->add_option("--checkpoint", eo.checkpoint)->required();
  embed_cmd->add_option("--manifest", eo.manifest)->required();
  embed_cmd->add_option("--data-dir", eo.data_dir);
  embed_cmd->add_option("--out", eo.out, "Output file, - for stdout")->capture_default_str();
  embed_cmd->add_option("--target-len", eo.target_len)->capture_default_str()->check(CLI::PositiveNumber);
  embed_cmd->add_option("--batch-size", eo.batch_size)->capture_default_str();

  SynthOpts so;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write a synthetic WAV corpus and manifest");
  synth_cmd->add_option("--out", so.out, "Output directory")->required();
  synth_cmd->add_option("--classes", so.classes)->capture_default_str();
  synth_cmd->add_option("--per-class", so.per_class)->capture_default_str();
  synth_cmd->add_option("--seed", so.seed)->capture_default_str();
  synth_cmd->add_option("--length", so.length)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--rate", so.rate)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--folds", so.folds)->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  json echo{{"command", cmd->get_name()}};
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help") continue;
    const auto results = opt->results();
    const std::string key = opt->get_name().substr(2);
    if (opt->get_expected_max() == 0) {
      echo[key] = opt->count() > 0;
    } else if (!results.empty()) {
      echo[key] = results.size() == 1 ? json(results.front()) : json(results);
    } else {
      echo[key] = opt->get_default_str();
    }
  }
  err << echo.dump() << "\n";

  try {
    if (cmd == train_cmd) return cmd_train(tr, out, err);
    if (cmd == eval_cmd) return cmd_eval(ev, out, err);
    if (cmd == predict_cmd) return cmd_predict(pr, out, err);
    if (cmd == count_cmd) return cmd_count(co, out, err);
    if (cmd == filters_cmd) return cmd_export_filters(fo, out, err);
    if (cmd == embed_cmd) return cmd_export_embeddings(eo, out, err);
    return cmd_synth(so, out, err);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace inucleus
