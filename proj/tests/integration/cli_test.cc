// tests/integration/cli_test.cc

// Copyright 2026  The tsadapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Runs the installed-layout tsadapt executable end to end on a small corpus.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tsadapt/corpus.h"
#include "tsadapt/distill.h"

#ifndef TSADAPT_BIN
#error "TSADAPT_BIN must name the tsadapt executable"
#endif

namespace tsadapt {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "tsadapt-cli-test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    ASSERT_EQ(Run("defaults suite-spec > spec.json").code, 0);
    ASSERT_EQ(Run("synth --spec spec.json --count 300 --seed 1 --out train").code, 0);
    ASSERT_EQ(Run("synth --spec spec.json --count 60 --seed 2 --out test").code, 0);
    ASSERT_EQ(Run("noise --kinds white,brown --duration 3 --seed 3 --out noise").code, 0);
    ASSERT_EQ(Run("pair --mode noisy --in train/manifest.tsv --noise noise "
                  "--snr 5:20 --seed 4 --out noisy/manifest.tsv").code, 0);
    ASSERT_EQ(Run("pair --mode noisy --in test/manifest.tsv --noise noise "
                  "--snr 0:60 --seed 5 --out noisy-test/manifest.tsv").code, 0);
    ASSERT_EQ(Run("train --mode teacher --data train/manifest.tsv --context 2 "
                  "--hidden 64 --epochs 6 --lr 0.05 --seed 6 --out teacher.net")
                  .code, 0);
  }

  static void TearDownTestSuite() {
    std::error_code ec;
    fs::remove_all(root_, ec);
  }

  /// Runs "tsadapt --quiet <args>" in the suite directory.  `args` may end
  /// in a shell redirection.
  static CliResult Run(const std::string &args) {
    const fs::path out = root_ / ".stdout", err = root_ / ".stderr";
    std::string cmd = "cd '" + root_.string() + "' && '" TSADAPT_BIN "' --quiet " +
                      args;
    if (args.find('>') == std::string::npos) cmd += " > '" + out.string() + "'";
    cmd += " 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = Slurp(out);
    r.err = Slurp(err);
    fs::remove(out);
    return r;
  }

  static fs::path Path(const std::string &leaf) { return root_ / leaf; }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, SynthWritesManifestAndResolvedConfig) {
  EXPECT_TRUE(fs::exists(Path("train/manifest.tsv")));
  EXPECT_TRUE(fs::exists(Path("train/config.json")));
  const ParallelManifest m = ReadManifest(Path("train/manifest.tsv").string());
  EXPECT_EQ(m.size(), 300u);
}

TEST_F(CliTest, SynthWithoutSpecIsAUsageError) {
  const CliResult r = Run("synth --count 3 --out x");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--spec"), std::string::npos) << r.err;
}

TEST_F(CliTest, SynthRerunIsByteIdentical) {
  ASSERT_EQ(Run("synth --spec spec.json --count 5 --seed 9 --out again1").code, 0);
  ASSERT_EQ(Run("synth --spec spec.json --count 5 --seed 9 --out again2").code, 0);
  for (const auto &entry : fs::directory_iterator(Path("again1"))) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".feat") continue;
    EXPECT_EQ(Slurp(entry.path()), Slurp(Path("again2") / name)) << name;
  }
}

TEST_F(CliTest, NoisyPairsDrawSnrsInRange) {
  const ParallelManifest m = ReadManifest(Path("noisy/manifest.tsv").string());
  EXPECT_EQ(m.size(), 300u);
  for (const NoiseDraw &d : NoiseDraws(m)) {
    EXPECT_GE(d.snr_db, 5.0);
    EXPECT_LE(d.snr_db, 20.0);
  }
  EXPECT_TRUE(fs::exists(Path("noisy/manifest.tsv.config.json")));
}

TEST_F(CliTest, WarpedPairsAndAlphaBound) {
  EXPECT_EQ(Run("pair --mode warped --in test/manifest.tsv --alpha 0.1 "
                "--out warped/manifest.tsv").code, 0);
  EXPECT_DOUBLE_EQ(
      std::stod(ReadManifest(Path("warped/manifest.tsv").string()).Require("alpha")),
      0.1);
  const CliResult bad = Run("pair --mode warped --in test/manifest.tsv "
                            "--alpha 1.5 --out bad/manifest.tsv");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("alpha"), std::string::npos);
}

TEST_F(CliTest, TeacherTrainingErrorIsLow) {
  const CliResult r =
      Run("eval --model teacher.net --data train/manifest.tsv --out train-eval.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(Slurp(Path("train-eval.jsonl")));
  EXPECT_LT(j.at("fer").get<double>(), 5.0);
  EXPECT_TRUE(fs::exists(Path("teacher.net.loss")));
  EXPECT_TRUE(fs::exists(Path("teacher.net.config.json")));
}

TEST_F(CliTest, TsWithoutTeacherIsAUsageError) {
  const CliResult r = Run("train --mode ts --data noisy/manifest.tsv --out s.net");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--teacher"), std::string::npos);
}

TEST_F(CliTest, InterpolationAtOneMatchesTs) {
  ASSERT_EQ(Run("train --mode ts --teacher teacher.net --data noisy/manifest.tsv "
                "--epochs 2 --seed 7 --out ts.net").code, 0);
  ASSERT_EQ(Run("train --mode interp --lambda 1 --teacher teacher.net "
                "--data noisy/manifest.tsv --epochs 2 --seed 7 --out interp.net")
                .code, 0);
  const LossReport ts = ReadLossReport(Path("ts.net.loss").string());
  const LossReport in = ReadLossReport(Path("interp.net.loss").string());
  EXPECT_NEAR(ts.Final().validation_objective, in.Final().validation_objective,
              1e-9);
}

TEST_F(CliTest, EvalBucketsAndReferenceModel) {
  const CliResult r = Run("eval --model teacher.net --data noisy-test/manifest.tsv "
                          "--buckets --ref-model teacher.net --out mixed.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char *name : {"<5dB", "[5,20)dB", "[20,35)dB", ">=35dB"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name << "\n" << r.out;
  const auto j = nlohmann::json::parse(Slurp(Path("mixed.jsonl")));
  EXPECT_TRUE(j.contains("mean_kl"));
  EXPECT_TRUE(j.contains("buckets"));
}

TEST_F(CliTest, EvalWithBadCheckpointNamesThePath) {
  const CliResult r = Run("eval --model missing-model.net --data test/manifest.tsv");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing-model.net"), std::string::npos) << r.err;
}

TEST_F(CliTest, RerunReproducesCheckpoint) {
  ASSERT_EQ(Run("train --mode pseudo --teacher teacher.net --data noisy/manifest.tsv "
                "--epochs 1 --seed 8 --out pseudo.net").code, 0);
  const std::string before = Slurp(Path("pseudo.net"));
  fs::remove(Path("pseudo.net"));
  ASSERT_EQ(Run("rerun pseudo.net.config.json").code, 0);
  EXPECT_EQ(Slurp(Path("pseudo.net")), before);
}

TEST_F(CliTest, UnknownSubcommandIsAUsageError) {
  EXPECT_EQ(Run("frobnicate").code, 2);
  EXPECT_EQ(Run("train --mode teacher --data train/manifest.tsv --hidden x,y "
                "--out y.net").code, 2);
}

TEST_F(CliTest, ScriptedSuiteWithOneSeedReportsInsufficientSeeds) {
  nlohmann::json cfg = nlohmann::json::parse(Run("defaults suite").out);
  cfg["train_utterances"] = 60;
  cfg["test_utterances"] = 20;
  cfg["hidden"] = {16};
  cfg["context"] = 1;
  cfg["teacher_train"]["max_epochs"] = 1;
  cfg["adapt"]["max_epochs"] = 1;
  cfg["scale_factor"] = 2;
  cfg["scaled_epochs"] = 1;
  cfg["endpoint_pairs"] = 10;
  cfg["endpoint_epochs"] = 1;
  std::ofstream(Path("tiny-suite.json")) << cfg.dump(2);
  const CliResult r = Run("paper-suite --scenario noisy --seeds 1 "
                          "--config tiny-suite.json --out suite");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string checks = Slurp(Path("suite/checks.txt"));
  EXPECT_NE(checks.find("INSUFFICIENT-SEEDS"), std::string::npos) << checks;
  EXPECT_TRUE(fs::exists(Path("suite/table.txt")));
  EXPECT_TRUE(fs::exists(Path("suite/results.jsonl")));
}

}  // namespace
}  // namespace tsadapt
