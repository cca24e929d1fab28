// core/include/tsadapt/eval.h

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

// Frame error rate, SNR-bucket breakdowns, teacher/student behavioural gap and
// experiment tables.

#ifndef TSADAPT_EVAL_H_
#define TSADAPT_EVAL_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tsadapt/dataset.h"
#include "tsadapt/nnet.h"
#include "tsadapt/signal.h"

namespace tsadapt {

/// Frames whose argmax (ties to the lowest class) differs from the label.
int64_t FrameErrors(const PosteriorMatrix &posteriors,
                    const std::vector<int32_t> &labels);
/// 100 * FrameErrors / frames.
double FrameErrorRate(const PosteriorMatrix &posteriors,
                      const std::vector<int32_t> &labels);

struct UtteranceScore {
  std::string id;
  int64_t frames = 0;
  int64_t errors = 0;
  double snr_db = 0.0;  // estimated; kSnrSentinelDb marks a failed estimate
};

/// Scores every labelled utterance; `snrs` may be empty (all zero).
std::vector<UtteranceScore> ScoreUtterances(
    const Network &net, const std::vector<LabeledFeatures> &data,
    const std::vector<double> &snrs = {}, int jobs = 1);

/// Error over all frames of a labelled set, in percent.
double CorpusErrorRate(const std::vector<UtteranceScore> &scores);

struct BucketStats {
  int64_t frames = 0;
  int64_t errors = 0;
  int64_t utterances = 0;

  std::optional<double> ErrorRate() const;
  bool operator==(const BucketStats &other) const = default;
};

struct BucketReport {
  std::array<BucketStats, kNumSnrBuckets> buckets;
  BucketStats sentinel;          // utterances whose SNR estimate failed
  double overall_error = 0.0;    // over every frame, sentinel included
  double bucket_average = 0.0;   // frame-weighted over the four buckets

  int64_t TotalFrames() const;
  bool operator==(const BucketReport &other) const = default;
};

BucketReport BucketBreakdown(const std::vector<UtteranceScore> &scores);

/// Mean over frames of KL(teacher(source_f) || student(target_f)), in nats.
double BehavioralGap(const Network &teacher, const FeatureMatrix &source,
                     const Network &student, const FeatureMatrix &target);
/// Frame-weighted mean over every pair of a parallel corpus.
double BehavioralGap(const Network &teacher, const Network &student,
                     const ParallelData &data, int jobs = 1);

struct EvalResult {
  std::string model_id;
  std::string corpus_id;
  std::string teacher_data;
  std::string student_data;  // "-" for models without adaptation
  double fer = 0.0;          // percent
  int64_t frames = 0;
  std::optional<double> mean_kl;
  std::optional<BucketReport> buckets;

  bool operator==(const EvalResult &other) const = default;
};

/// One JSON object per line.
std::string EmitResults(const std::vector<EvalResult> &results);
std::vector<EvalResult> ParseResults(const std::string &text);

/// Aligned text table: teacher data, student data, then one error column per
/// corpus id (first-appearance order).  Rows are sorted by (teacher data,
/// student data).
std::string ExperimentTable(const std::vector<EvalResult> &results);

/// Four-bucket text table for one report.
std::string BucketTable(const BucketReport &report);

}  // namespace tsadapt

#endif  // TSADAPT_EVAL_H_
