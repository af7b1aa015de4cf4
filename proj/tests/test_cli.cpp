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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "inucleus/analysis.hpp"
#include "inucleus/audio.hpp"
#include "inucleus/checkpoint.hpp"
#include "inucleus/cli.hpp"
#include "test_support.hpp"

namespace inucleus {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

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

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

// A small synthetic corpus plus a one-epoch full-size checkpoint shared by the suite.
class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const CliRun s = cli({"synth-data", "--out", corpus().string(), "--classes", "10", "--per-class", "2",
                       "--length", "2000", "--folds", "2", "--seed", "3"});
    ASSERT_EQ(s.code, 0) << s.err;
    const CliRun t = cli({"train", "--arch", "inception", "--manifest", manifest(), "--test-folds", "2",
                       "--epochs", "1", "--target-len", "2000", "--seed", "7", "--out", run().string()});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path corpus() { return dir_->path() / "corpus"; }
  static fs::path run() { return dir_->path() / "run"; }
  static std::string manifest() { return (corpus() / "manifest.csv").string(); }
  static std::string checkpoint() { return (run() / "last.inuc").string(); }
  static inline TempDir* dir_ = nullptr;
};

TEST(CliBasics, CountParams) {
  const CliRun a = cli({"count-params", "--arch", "inception"});
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("trainable\t289450"), std::string::npos) << a.out;
  EXPECT_TRUE(a.err.find("warning") == std::string::npos);
  const CliRun b = cli({"count-params", "--arch", "inception_bn", "--include-non-trainable"});
  EXPECT_NE(b.out.find("count\t292050"), std::string::npos) << b.out;
  EXPECT_NE(cli({"count-params", "--arch", "inception_fa"}).out.find("count\t789162"), std::string::npos);
  const CliRun fi = cli({"count-params", "--arch", "inception_fi"});
  EXPECT_EQ(fi.code, 0);
  EXPECT_NE(fi.out.find("count\t593706"), std::string::npos);
  EXPECT_NE(fi.err.find("warning"), std::string::npos);
}

TEST(CliBasics, ConfigEchoIsJson) {
  const CliRun a = cli({"count-params", "--arch", "inception_fa"});
  const auto echo = nlohmann::json::parse(lines(a.err).at(0));
  EXPECT_EQ(echo.at("command"), "count-params");
  EXPECT_EQ(echo.at("arch"), "inception_fa");
  EXPECT_EQ(echo.at("num-classes"), "10");
  EXPECT_EQ(echo.at("include-non-trainable"), false);
}

TEST(CliBasics, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"count-params", "--bogus-flag"}).code, kExitUsage);
  EXPECT_EQ(cli({"count-params", "--help"}).code, kExitOk);
  const CliRun bad = cli({"count-params", "--arch", "bogus"});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("inception_bn"), std::string::npos) << bad.err;
  const CliRun missing = cli({"train", "--manifest", "/nonexistent/m.csv"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("manifest"), std::string::npos) << missing.err;
  EXPECT_EQ(cli({"train"}).code, kExitUsage);
}

TEST_F(CliFixture, TrainWritesCheckpointsAndLogs) {
  EXPECT_TRUE(fs::exists(run() / "last.inuc"));
  EXPECT_TRUE(fs::exists(run() / "best.inuc"));
  const auto log = lines(slurp(run() / "train_log.jsonl"));
  ASSERT_EQ(log.size(), 1u);
  const auto e = nlohmann::json::parse(log[0]);
  EXPECT_EQ(e.at("epoch"), 1);
  EXPECT_TRUE(e.at("train_loss").is_number());
  EXPECT_TRUE(e.at("test_accuracy").is_number());
  const auto summary = nlohmann::json::parse(slurp(run() / "summary.json"));
  EXPECT_EQ(summary.at("train_clips"), 10);
  EXPECT_EQ(summary.at("test_clips"), 10);
  const Checkpoint ck = load_checkpoint(run() / "last.inuc");
  EXPECT_EQ(ck.meta.epoch, 1u);
  EXPECT_EQ(ck.meta.seed, 7u);
  EXPECT_EQ(ck.meta.class_names.size(), 10u);
  ASSERT_TRUE(ck.optimizer.has_value());
}

TEST_F(CliFixture, BogusArchListsNames) {
  const CliRun r = cli({"train", "--arch", "bogus", "--manifest", manifest(), "--out",
                     (dir_->path() / "bogus").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("inception_fi"), std::string::npos) << r.err;
}

TEST_F(CliFixture, SameSeedSameBytes) {
  const fs::path again = dir_->path() / "again";
  const CliRun t = cli({"train", "--arch", "inception", "--manifest", manifest(), "--test-folds", "2",
                     "--epochs", "1", "--target-len", "2000", "--seed", "7", "--out", again.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(slurp(again / "last.inuc"), slurp(run() / "last.inuc"));
  EXPECT_EQ(slurp(again / "loss_log.tsv"), slurp(run() / "loss_log.tsv"));
}

TEST_F(CliFixture, PredictVariableLength) {
  const fs::path wav = dir_->path() / "two_seconds.wav";
  write_wav(wav, synth_signal(0, 42, 0, 16000, 8000), 8000);
  const CliRun a = cli({"predict", "--checkpoint", checkpoint(), "--wav", wav.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto rows = lines(a.out);
  ASSERT_EQ(rows.size(), 10u);
  double sum = 0.0, prev = 2.0;
  for (const auto& row : rows) {
    const auto f = split(row, '\t');
    ASSERT_EQ(f.size(), 4u) << row;
    const double p = std::stod(f[3]);
    EXPECT_LE(p, prev);
    prev = p;
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-5);
  EXPECT_EQ(cli({"predict", "--checkpoint", checkpoint(), "--wav", wav.string()}).out, a.out);
  EXPECT_EQ(lines(cli({"predict", "--checkpoint", checkpoint(), "--wav", wav.string(), "--top-k", "3"}).out)
                .size(),
            3u);
  const fs::path full = dir_->path() / "four_seconds.wav";
  write_wav(full, synth_signal(1, 42, 0, 32000, 8000), 8000);
  EXPECT_EQ(cli({"predict", "--checkpoint", checkpoint(), "--wav", full.string()}).code, 0);
}

TEST_F(CliFixture, PredictRejectsBadInput) {
  const fs::path bad = dir_->path() / "corrupt.wav";
  std::ofstream(bad) << "RIFF\x10\0\0\0WAVEjunk";
  const CliRun r = cli({"predict", "--checkpoint", checkpoint(), "--wav", bad.string()});
  EXPECT_EQ(r.code, kExitUsage);
  const fs::path tiny = dir_->path() / "tiny.wav";
  write_wav(tiny, std::vector<float>(100, 0.1f), 8000);
  const CliRun t = cli({"predict", "--checkpoint", checkpoint(), "--wav", tiny.string()});
  EXPECT_EQ(t.code, kExitUsage);
  EXPECT_NE(t.err.find("minimum input length"), std::string::npos) << t.err;
  const CliRun notck = cli({"predict", "--checkpoint", manifest(), "--wav", tiny.string()});
  EXPECT_EQ(notck.code, kExitUsage);
  EXPECT_NE(notck.err.find("not a checkpoint"), std::string::npos) << notck.err;
}

TEST_F(CliFixture, EvalPrintsMetrics) {
  const CliRun r = cli({"eval", "--checkpoint", checkpoint(), "--manifest", manifest(), "--test-folds", "2",
                     "--target-len", "2000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("count"), 10);
  EXPECT_GE(j.at("accuracy").get<double>(), 0.0);
  EXPECT_EQ(j.at("confusion").size(), 10u);
}

TEST_F(CliFixture, ExportFiltersRoundTrip) {
  const fs::path csv = dir_->path() / "filters.csv";
  const CliRun r = cli({"export-filters", "--checkpoint", checkpoint(), "--out", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(csv));
  ASSERT_EQ(rows.size(), 32u);
  const Model<float> m = load_checkpoint(checkpoint()).model();
  const Tensor<float>& w = m.params().get("conv1d0.weight").value;
  for (std::size_t f = 0; f < rows.size(); ++f) {
    const auto cells = split(rows[f], ',');
    ASSERT_EQ(cells.size(), 81u);
    EXPECT_EQ(std::stoul(cells[0]), f);
    for (std::size_t k = 0; k < 80; ++k) ASSERT_EQ(std::stof(cells[k + 1]), w[f * 80 + k]);
  }
  for (const std::string& layer : filter_layer_names(m)) {
    const CliRun l = cli({"export-filters", "--checkpoint", checkpoint(), "--layer", layer, "--out", "-"});
    ASSERT_EQ(l.code, 0) << layer << l.err;
    EXPECT_EQ(lines(l.out).size(), m.params().get(layer + ".weight").value.dim(0)) << layer;
  }
  const CliRun bad = cli({"export-filters", "--checkpoint", checkpoint(), "--layer", "nope"});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("conv1d0"), std::string::npos);
}

TEST_F(CliFixture, ExportEmbeddings) {
  // Two rows naming the same clip must produce identical vectors.
  const fs::path m2 = corpus() / "dup.csv";
  const Manifest src = read_manifest(manifest());
  Manifest dup = src;
  dup.rows.push_back(src.rows[0]);
  std::ofstream(m2) << format_manifest(dup);
  const fs::path tsv = dir_->path() / "emb.tsv";
  const CliRun r = cli({"export-embeddings", "--checkpoint", checkpoint(), "--manifest", m2.string(), "--out",
                     tsv.string(), "--target-len", "2000", "--batch-size", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(tsv));
  ASSERT_EQ(rows.size(), dup.rows.size());
  const auto first = split(rows.front(), '\t');
  const auto last = split(rows.back(), '\t');
  EXPECT_EQ(first, last);
  const auto shapes = load_checkpoint(checkpoint()).model().layer_shapes(2000);
  const Shape& pre_gap = shapes[shapes.size() - 3];
  EXPECT_EQ(first.size(), 2 + pre_gap[0] * pre_gap[1] * pre_gap[2]);
}

// Exit codes as seen by a shell.
int shell(const std::string& args) {
  const std::string cmd = std::string(INUCLEUS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliFixture, ProcessExitCodes) {
  EXPECT_EQ(shell("count-params --arch inception"), 0);
  EXPECT_EQ(shell("count-params --arch bogus"), 2);
  EXPECT_EQ(shell("train --manifest /nonexistent.csv"), 2);
  const fs::path out = dir_->path() / "diverge";
  EXPECT_EQ(shell("train --arch inception_mini --manifest " + manifest() +
                  " --epochs 3 --target-len 512 --lr 1e38 --out " + out.string()),
            3);
}

}  // namespace
}  // namespace inucleus
