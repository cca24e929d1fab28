// core/include/tsadapt/signal.h

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

#ifndef TSADAPT_SIGNAL_H_
#define TSADAPT_SIGNAL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tsadapt {

/// Mono waveform.  Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t size() const { return samples.size(); }
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  /// Throws unless sample_rate > 0, samples are non-empty and all finite.
  void Validate() const;
  bool operator==(const Waveform &other) const = default;
};

/// Mean of squared samples over the whole waveform.
double MeanPower(const Waveform &wave);

/// Number of frames of length `frame_len` at shift `hop` that fit into
/// `num_samples`; zero when the signal is shorter than one frame.
int NumFrames(size_t num_samples, int frame_len, int hop);

// ---------------------------------------------------------------------------
// Synthetic labelled speech.

/// Describes a synthetic "phone set": num_classes formant templates plus the
/// utterance layout.  Class templates depend only on template_seed, so every
/// utterance drawn from one spec shares the same classes.
struct SynthSpec {
  int num_classes = 20;
  double duration_s = 0.6;
  int sample_rate = 16000;
  double frame_length_s = 0.025;
  double frame_shift_s = 0.010;
  double min_segment_s = 0.08;
  double max_segment_s = 0.20;
  // Leading and trailing silence.  When positive, class 0 is the silence
  // class and sounding segments draw from classes 1..num_classes-1.
  double edge_silence_s = 0.0;
  double f0_min_hz = 100.0;
  double f0_max_hz = 220.0;
  double segment_rms = 0.1;
  double amplitude_jitter = 0.1;   // relative, uniform +/-
  double formant_jitter = 0.02;    // relative, uniform +/-
  // Stationary white background added over the whole utterance (RMS, in
  // sample units).  Zero gives digital silence between segments.
  double background_rms = 1e-3;
  // Share of non-silence classes that are unvoiced (noise-excited, with
  // resonances between 2.5 kHz and 0.45 * sample_rate).
  double unvoiced_fraction = 0.25;
  uint64_t template_seed = 17;

  int FrameLength() const;
  int FrameShift() const;
  int NumSamples() const;
  bool HasSilenceClass() const { return edge_silence_s > 0.0; }
  /// Throws on a degenerate spec.
  void Validate() const;

  std::string ToJson() const;
  static SynthSpec FromJson(const std::string &text);
};

struct ClassTemplate {
  std::vector<double> formants_hz;    // empty for the silence class
  std::vector<double> bandwidths_hz;
  bool voiced = true;                 // false: noise excitation
  bool silent() const { return formants_hz.empty(); }
};

/// Deterministic class templates for `spec`; each voiced class carries 2 or
/// 3 resonances and differs from every other class by at least ~10% in one
/// of its first two formants.
std::vector<ClassTemplate> MakeClassTemplates(const SynthSpec &spec);

struct LabeledUtterance {
  Waveform wave;
  std::vector<int32_t> frame_labels;
};

/// Concatenation of randomly ordered class segments (impulse-train
/// excitation through the class's cascaded resonators), with one label per
/// analysis frame: the class active at the frame centre.
LabeledUtterance SynthUtterance(const SynthSpec &spec, uint64_t seed);

// ---------------------------------------------------------------------------
// Noise mixing and SNR.

/// Returns clean + g * noise[offset, offset + clean.size()) with
/// g = sqrt(P_clean / (P_noise_segment * 10^(snr_db / 10))).
/// If `gain` is non-null the applied g is stored there.
Waveform MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                  size_t noise_offset, double *gain = nullptr);

/// As above with the crop offset drawn uniformly from `seed`.
Waveform MixAtSnrSeeded(const Waveform &clean, const Waveform &noise,
                        double snr_db, uint64_t seed,
                        size_t *noise_offset = nullptr);

/// Value returned by EstimateSnr when the noise estimate is below the floor.
inline constexpr double kSnrSentinelDb = 99.0;

/// Percentile SNR detector: speech power is the mean energy of the loudest
/// 30% of frames, noise power the mean of the quietest 20%.
double EstimateSnr(const Waveform &mixed, int frame_len, int hop,
                   double noise_floor = 1e-10);

inline bool IsSnrSentinel(double snr_db) { return snr_db >= kSnrSentinelDb; }

enum class SnrBucket { kBelow5 = 0, kFrom5To20, kFrom20To35, kAbove35 };
inline constexpr int kNumSnrBuckets = 4;

/// Half-open buckets: (-inf,5) [5,20) [20,35) [35,inf).
SnrBucket SnrBucketFor(double snr_db);
std::string_view SnrBucketName(SnrBucket bucket);

// ---------------------------------------------------------------------------
// Synthetic noise sources.

enum class NoiseKind { kWhite, kBrown, kModulatedBand, kHum };
NoiseKind ParseNoiseKind(std::string_view name);
std::string_view NoiseKindName(NoiseKind kind);
Waveform SynthNoise(NoiseKind kind, double duration_s, int sample_rate,
                    uint64_t seed);

// ---------------------------------------------------------------------------
// WAV I/O: PCM, 16-bit signed little-endian, mono only.

Waveform ReadWav(const std::string &path);
Waveform ParseWav(std::string_view bytes, const std::string &origin = "<memory>");
void WriteWav(const std::string &path, const Waveform &wave);
std::string EncodeWav(const Waveform &wave);

/// Rounds samples to the 16-bit grid used by WriteWav, so that in-memory
/// processing matches what a later ReadWav returns.
Waveform QuantizePcm16(const Waveform &wave);

}  // namespace tsadapt

#endif  // TSADAPT_SIGNAL_H_
