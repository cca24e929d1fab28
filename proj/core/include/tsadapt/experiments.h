// core/include/tsadapt/experiments.h

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

// Scripted adaptation experiments on synthetic data: the noisy-domain
// scenario (teacher, multi-condition baseline, 1x and 4x students, SNR
// buckets, unseen-noise evaluation, pseudo-label baseline) and the warped
// "children" scenario (warped evaluation, domain-classifier filtering).
//
// Layout of one seed directory:
//
//   clean/{train,test}/     labelled synthetic corpora (+ manifest.tsv)
//   noise/, noise-heldout/  noise recordings
//   pairs/<name>/           parallel corpora (+ manifest.tsv)
//   models/<id>.net         checkpoints, with <id>.loss next to them
//   results.jsonl           one EvalResult per line

#ifndef TSADAPT_EXPERIMENTS_H_
#define TSADAPT_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsadapt/distill.h"
#include "tsadapt/eval.h"
#include "tsadapt/features.h"
#include "tsadapt/nnet.h"
#include "tsadapt/signal.h"

namespace tsadapt {

/// Synthetic spec used by the scripted experiments: short utterances with
/// edge silence.
SynthSpec SuiteSynthSpec();

struct SuiteConfig {
  SynthSpec spec = SuiteSynthSpec();
  FeatureConfig feat;
  int train_utterances = 2000;
  int test_utterances = 300;
  int context = 3;
  std::vector<int> hidden = {128, 128};
  Activation activation = Activation::kTanh;
  TsConfig teacher_train = DefaultTeacherConfig();
  TsConfig adapt = DefaultAdaptConfig();
  int scale_factor = 4;
  int scaled_epochs = 4;  // max epochs on the scaled corpus
  double snr_lo = 5.0;
  double snr_hi = 20.0;
  double mixed_snr_lo = 0.0;   // SNR range of the bucketed test set
  double mixed_snr_hi = 60.0;
  double noise_duration_s = 5.0;
  double warp_alpha = 0.1;
  double child_share = 0.3;    // true share of warped pairs before filtering
  int classifier_utterances = 1000;
  double filter_threshold = 0.5;
  int endpoint_pairs = 100;    // subset used for the interpolation endpoints
  int endpoint_epochs = 2;

  static TsConfig DefaultTeacherConfig();
  static TsConfig DefaultAdaptConfig();

  void Validate() const;
  std::string ToJson() const;
  static SuiteConfig FromJson(const std::string &text);
};

enum class Scenario { kNoisy, kMismatch, kChildren };
Scenario ParseScenario(const std::string &name);
std::string ScenarioName(Scenario scenario);

/// Stage messages, one line each.
using ProgressFn = std::function<void(const std::string &)>;

struct SeedReport {
  uint64_t seed = 0;
  std::vector<EvalResult> results;
  std::map<std::string, double> metrics;  // named scalars (gaps, fractions)
  double wall_seconds = 0.0;
};

/// Error (percent) of `model` on `corpus`; throws when absent.
double FindFer(const std::vector<EvalResult> &results,
               const std::string &model, const std::string &corpus);
const EvalResult &FindResult(const std::vector<EvalResult> &results,
                             const std::string &model,
                             const std::string &corpus);

/// Full noisy-domain pipeline for one seed.  Writes every artifact under
/// `dir`.  `baselines` adds the pseudo-label model and the interpolation
/// endpoint runs.
SeedReport RunNoisySeed(const SuiteConfig &cfg, uint64_t seed,
                        const std::string &dir, bool baselines = true,
                        int jobs = 1, const ProgressFn &progress = nullptr);

/// Warped-domain pipeline for one seed.  When `teacher` is null a teacher is
/// trained on the clean corpus first.
SeedReport RunChildrenSeed(const SuiteConfig &cfg, uint64_t seed,
                           const std::string &dir,
                           const Network *teacher = nullptr, int jobs = 1,
                           const ProgressFn &progress = nullptr);

// ---------------------------------------------------------------------------
// Aggregation and trend checks.

/// Mean error, frames and KL per (model, corpus) over seeds; buckets are
/// pooled by summing frames and errors.
std::vector<EvalResult> AverageResults(const std::vector<SeedReport> &reports);
/// Mean of a named metric over seeds.
double MeanMetric(const std::vector<SeedReport> &reports,
                  const std::string &name);
/// Seed-averaged error of one bucket; empty when no seed has frames there.
std::optional<double> MeanBucketError(const std::vector<SeedReport> &reports,
                                      const std::string &model,
                                      const std::string &corpus, int bucket);

enum class CheckStatus { kPass, kFail, kFinding, kInsufficientSeeds };
std::string CheckStatusName(CheckStatus status);

struct TrendCheck {
  std::string id;
  std::string description;
  CheckStatus status = CheckStatus::kFail;
  std::string detail;
  bool soft = false;  // a violation is reported as a finding
};

/// Seeds needed before trend assertions are evaluated.
inline constexpr int kMinTrendSeeds = 3;

std::vector<TrendCheck> CheckNoisyTrends(const std::vector<SeedReport> &reports);
std::vector<TrendCheck> CheckMismatchTrends(
    const std::vector<SeedReport> &reports);
std::vector<TrendCheck> CheckChildrenTrends(
    const std::vector<SeedReport> &reports);

/// Bucket table for a teacher/student pair, seed-averaged.
std::string SeedBucketTable(const std::vector<SeedReport> &reports,
                            const std::string &teacher,
                            const std::string &student,
                            const std::string &corpus);
std::string ChecksText(const std::vector<TrendCheck> &checks);

struct ScenarioOutput {
  std::vector<SeedReport> reports;
  std::vector<TrendCheck> checks;
  std::string table;  // human-readable tables
};

/// Runs seeds 1..num_seeds (offset by base_seed) on up to `jobs` threads,
/// each in "<out_dir>/seed<N>", then writes table.txt, checks.txt and
/// results.jsonl (seed-averaged) into `out_dir`.  Any stage failure is
/// rethrown naming the stage and seed.
ScenarioOutput RunScenario(Scenario scenario, const SuiteConfig &cfg,
                           int num_seeds, uint64_t base_seed,
                           const std::string &out_dir, int jobs = 1,
                           const ProgressFn &progress = nullptr);

}  // namespace tsadapt

#endif  // TSADAPT_EXPERIMENTS_H_
