// core/include/tsadapt/corpus.h

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

// Labelled synthetic corpora and parallel (source, target) corpora on disk.
//
// Every utterance lives as a feature file "<id>.feat", with an optional
// waveform "<id>.wav" and optional frame labels "<id>.lab" next to it.  A
// manifest lists (source, target, frames) pairs; a plain labelled corpus is a
// manifest of identity pairs.
//
// Manifest file:
//
//   #key=value                      (metadata, in order, keys may repeat)
//   src_id <TAB> src.feat <TAB> tgt_id <TAB> tgt.feat <TAB> frames <TAB> src_domain,tgt_domain
//
// Paths in the file are relative to the manifest's directory; in memory they
// are absolute.

#ifndef TSADAPT_CORPUS_H_
#define TSADAPT_CORPUS_H_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsadapt/dataset.h"
#include "tsadapt/features.h"
#include "tsadapt/nnet.h"
#include "tsadapt/signal.h"

namespace tsadapt {

struct UtteranceRecord {
  std::string id;
  std::string feature_path;
  std::string wave_path;   // empty when no waveform exists
  std::string label_path;  // empty when unlabelled
  std::string domain;

  bool HasLabels() const { return !label_path.empty(); }
  bool operator==(const UtteranceRecord &other) const = default;
};

struct ManifestPair {
  UtteranceRecord source;
  UtteranceRecord target;
  int frames = 0;

  bool operator==(const ManifestPair &other) const = default;
};

struct ParallelManifest {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<ManifestPair> pairs;

  size_t size() const { return pairs.size(); }
  /// First value stored under `key`.
  std::optional<std::string> Get(const std::string &key) const;
  /// Like Get but throws naming the key when absent.
  std::string Require(const std::string &key) const;
  std::vector<std::string> GetAll(const std::string &key) const;
  /// Replaces every value under `key` with one entry.
  void Set(const std::string &key, const std::string &value);
  void Add(const std::string &key, const std::string &value);

  /// Source records, in pair order (for identity-pair corpora these are the
  /// utterances themselves).
  std::vector<UtteranceRecord> Sources() const;

  bool operator==(const ParallelManifest &other) const = default;
};

void WriteManifest(const std::string &path, const ParallelManifest &manifest);
/// Resolves paths, checks that every pair's feature headers agree with the
/// recorded frame count and that target ids are unique.
ParallelManifest ReadManifest(const std::string &path);

/// Identity-pair manifest over labelled utterances.
ParallelManifest CorpusManifest(const std::vector<UtteranceRecord> &records);

void WriteLabels(const std::string &path, const std::vector<int32_t> &labels);
std::vector<int32_t> ReadLabels(const std::string &path);

/// Runs fn(0..n-1) on up to `jobs` threads.  The first exception (by task
/// index) is rethrown after all threads finish.
void ParallelFor(size_t n, int jobs, const std::function<void(size_t)> &fn);

// ---------------------------------------------------------------------------
// Generation.

/// `count` labelled utterances with seeds derived from `seed`; waves are
/// quantised to 16-bit PCM before featurising so the written .wav reproduces
/// the written features.  Ids are "<prefix><index>" zero-padded.
std::vector<UtteranceRecord> SynthCorpus(const SynthSpec &spec, int count,
                                         uint64_t seed,
                                         const std::string &out_dir,
                                         const FeatureConfig &feat = {},
                                         int jobs = 1,
                                         const std::string &prefix = "utt");

struct NoiseSource {
  std::string id;
  std::string path;
  Waveform wave;
};

/// Synthesises one noise recording per kind, written as "<dir>/<kind>.wav".
std::vector<NoiseSource> SynthNoiseSet(const std::vector<NoiseKind> &kinds,
                                       double duration_s, int sample_rate,
                                       uint64_t seed, const std::string &out_dir);

/// Loads every .wav in a directory (sorted by name); id = file stem.
std::vector<NoiseSource> LoadNoiseDir(const std::string &dir);

/// For each clean utterance draws a noise, a crop offset and an SNR uniform in
/// [snr_lo, snr_hi], mixes, and featurises.  All draws go into the metadata.
ParallelManifest BuildNoisyParallel(const std::vector<UtteranceRecord> &clean,
                                    const std::vector<NoiseSource> &noises,
                                    double snr_lo, double snr_hi, uint64_t seed,
                                    const std::string &out_dir,
                                    const FeatureConfig &feat = {},
                                    int jobs = 1);

/// Target features are the bilinear-warped pipeline on the same waveform.
ParallelManifest BuildWarpedParallel(const std::vector<UtteranceRecord> &adults,
                                     double alpha, uint64_t seed,
                                     const std::string &out_dir,
                                     const FeatureConfig &feat = {},
                                     int jobs = 1);

enum class ManifestSide { kSource, kTarget };

/// Keeps pairs whose chosen side has mean posterior for `accept_class` at or
/// above `threshold`.  Records "filter.retained_fraction" in the metadata.
ParallelManifest FilterByDomainClassifier(const ParallelManifest &manifest,
                                          const Network &clf, int accept_class,
                                          double threshold, ManifestSide side);

/// Grows a noisy manifest to factor x its pairs by regenerating fresh
/// (noise, offset, SNR) draws for its source utterances; no generation tuple
/// repeats.  New files go to `out_dir`.
ParallelManifest ScaleCorpus(const ParallelManifest &manifest, int factor,
                             uint64_t seed, const std::string &out_dir,
                             int jobs = 1);

// ---------------------------------------------------------------------------
// Loading.

LabeledFeatures LoadUtterance(const UtteranceRecord &record);
std::vector<LabeledFeatures> LoadUtterances(
    const std::vector<UtteranceRecord> &records, int jobs = 1);
/// Source features, target features and target labels (if any) per pair.
ParallelData LoadParallelData(const ParallelManifest &manifest, int jobs = 1);

/// Pair generation tuple as recorded by BuildNoisyParallel / ScaleCorpus.
struct NoiseDraw {
  std::string target_id;
  std::string source_id;
  std::string noise_id;
  size_t offset = 0;
  double snr_db = 0.0;

  std::string ToString() const;
  static NoiseDraw Parse(const std::string &text);
};

std::vector<NoiseDraw> NoiseDraws(const ParallelManifest &manifest);

}  // namespace tsadapt

#endif  // TSADAPT_CORPUS_H_
