// core/include/tsadapt/distill.h

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

// Teacher/student adaptation on parallel unlabeled data.
//
// The student is a copy of the teacher.  For each mini-batch the teacher sees
// source-domain frames and the student sees the frame-synchronous target
// frames; the student is trained to minimise the soft-target cross-entropy
//
//     - sum_f sum_i P_T(i | x_src,f) log P_S(i | x_tgt,f)
//
// which differs from KL(P_T || P_S) only by the teacher entropy, a constant
// with respect to the student.  Labels are never consulted.
//
// The same training loop also drives the baselines this method is compared
// against: supervised hard-label training (and the multi-condition model when
// fed noisy labelled data), self-training on teacher argmax labels, and the
// interpolated soft/hard distillation objective.

#ifndef TSADAPT_DISTILL_H_
#define TSADAPT_DISTILL_H_

#include <optional>
#include <string>
#include <vector>

#include "tsadapt/dataset.h"
#include "tsadapt/nnet.h"

namespace tsadapt {

struct TsConfig {
  int batch_frames = 256;
  int max_epochs = 10;
  double learning_rate = 0.05;
  double lr_decay = 0.8;         // lr at epoch e is learning_rate * decay^(e-1)
  double momentum = 0.9;
  double tol = 1e-3;             // relative validation improvement
  int patience = 3;
  double validation_fraction = 0.1;
  uint64_t seed = 1;

  void Validate() const;
  std::string ToJson() const;
  static TsConfig FromJson(const std::string &text);
};

struct EpochRecord {
  int epoch = 0;
  double train_objective = 0.0;       // nats per frame
  double validation_objective = 0.0;  // nats per frame
  std::optional<double> validation_fer;  // percent
  double wall_seconds = 0.0;

  bool operator==(const EpochRecord &other) const = default;
};

/// Per-epoch progress.  Epoch 0 is the untrained starting point.
struct LossReport {
  std::vector<EpochRecord> epochs;

  const EpochRecord &Final() const;
  /// Tab-separated lines: epoch, train, validation, fer|NA, seconds.
  std::string ToText() const;
  static LossReport FromText(const std::string &text);
  bool operator==(const LossReport &other) const = default;
};

void WriteLossReport(const std::string &path, const LossReport &report);
LossReport ReadLossReport(const std::string &path);

struct TrainResult {
  Network net;
  LossReport report;
};

// ---------------------------------------------------------------------------
// Losses.

/// sum_f sum_i T log(T / S), in nats.
double KlDivergence(const PosteriorMatrix &teacher,
                    const PosteriorMatrix &student);

/// -sum_f sum_i T log T.
double Entropy(const PosteriorMatrix &posteriors);

struct LossAndGradient {
  double loss = 0.0;
  Matrix dloss_dlogits;
};

/// Soft-target cross-entropy -sum T log softmax(logits) (posterior floor
/// applied) and its gradient softmax(logits) - T.
LossAndGradient SoftCeLoss(const PosteriorMatrix &teacher,
                           const Matrix &student_logits);

/// -sum_f log P(label_f | x_f) and its gradient.
LossAndGradient HardCeLoss(const std::vector<int32_t> &labels,
                           const Matrix &logits);

/// lambda * SoftCeLoss + (1 - lambda) * HardCeLoss, frame by frame.
LossAndGradient InterpolatedLoss(const PosteriorMatrix &teacher,
                                 const std::vector<int32_t> &labels,
                                 const Matrix &logits, double lambda);

// ---------------------------------------------------------------------------
// Trainers.

/// Clones the teacher (or `init` when given) and adapts the clone on parallel
/// data.  The teacher is read-only.
TrainResult TsAdapt(const Network &teacher, const ParallelData &corpus,
                    const TsConfig &cfg, const Network *init = nullptr);

/// Supervised cross-entropy training starting from `init`.
TrainResult TrainHard(const Network &init,
                      const std::vector<LabeledFeatures> &data,
                      const TsConfig &cfg);

/// Self-training baseline: labels are the teacher's argmax (ties to the
/// lowest class) on the target features; training starts from the teacher
/// (or `init`).
TrainResult PseudoLabelAdapt(const Network &teacher,
                             const std::vector<FeatureMatrix> &targets,
                             const TsConfig &cfg,
                             const Network *init = nullptr);

/// Interpolated distillation: per-frame target lambda * P_T(src) + (1 -
/// lambda) * onehot(label).  Requires target labels; starts from the teacher
/// (or `init`).
TrainResult InterpolatedDistill(const Network &teacher,
                                const ParallelData &corpus, double lambda,
                                const TsConfig &cfg,
                                const Network *init = nullptr);

/// Copy of the teacher whose input normalisation is refit on target-domain
/// features; the layers are untouched.
Network CloneForTarget(const Network &teacher,
                       const std::vector<const Matrix *> &targets);

/// Teacher argmax labels with the lowest-index tie rule.
std::vector<int32_t> PseudoLabels(const Network &teacher,
                                  const FeatureMatrix &features);

}  // namespace tsadapt

#endif  // TSADAPT_DISTILL_H_
