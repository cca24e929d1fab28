// core/include/tsadapt/dataset.h

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

#ifndef TSADAPT_DATASET_H_
#define TSADAPT_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tsadapt/features.h"

namespace tsadapt {

/// One utterance of features with optional frame labels (empty = unlabeled).
struct LabeledFeatures {
  std::string id;
  FeatureMatrix features;
  std::vector<int32_t> labels;

  bool HasLabels() const { return !labels.empty(); }
};

/// Frame-synchronous source/target rendering of the same content.  Target
/// labels are optional and only used by label-aware trainers and for
/// reporting frame error.
struct FeaturePair {
  std::string id;
  FeatureMatrix source;
  FeatureMatrix target;
  std::vector<int32_t> target_labels;
};

using ParallelData = std::vector<FeaturePair>;

/// Throws if a pair's source and target frame counts differ, or labels do
/// not align with frames.
void CheckAligned(const FeaturePair &pair);

/// Target side of each pair as labelled utterances.
std::vector<LabeledFeatures> TargetSide(const ParallelData &data);
/// Source side of each pair; labels are the target labels (they are
/// frame-aligned by construction).
std::vector<LabeledFeatures> SourceSide(const ParallelData &data);

}  // namespace tsadapt

#endif  // TSADAPT_DATASET_H_
