// core/include/tsadapt/features.h

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

#ifndef TSADAPT_FEATURES_H_
#define TSADAPT_FEATURES_H_

#include <memory>
#include <string>

#include "tsadapt/common.h"
#include "tsadapt/signal.h"

namespace tsadapt {

/// Magnitude short-time spectrum, frames x (fft_size/2 + 1).
struct Spectrogram {
  Matrix magnitudes;
  double bin_hz = 0.0;
  int frame_len = 0;
  int hop = 0;
  int fft_size = 0;
  int sample_rate = 0;

  int NumFrames() const { return static_cast<int>(magnitudes.rows()); }
  int NumBins() const { return static_cast<int>(magnitudes.cols()); }
};

/// Frames x dims log filterbank features plus the framing they came from.
struct FeatureMatrix {
  Matrix values;
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 0;

  int NumFrames() const { return static_cast<int>(values.rows()); }
  int Dim() const { return static_cast<int>(values.cols()); }
  bool operator==(const FeatureMatrix &other) const {
    return frame_len == other.frame_len && hop == other.hop &&
           sample_rate == other.sample_rate &&
           values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
  }
};

/// Bilinear warp factor; |alpha| < 1 keeps the all-pass pole inside the
/// unit circle.
struct WarpConfig {
  double alpha = 0.1;
  void Validate() const;
};

/// Complete front-end configuration.
struct FeatureConfig {
  int frame_len = 400;  // 25 ms at 16 kHz
  int hop = 160;        // 10 ms at 16 kHz
  int fft_size = 512;
  int n_mels = 80;
  double log_floor = 1e-10;
  void Validate() const;
};

/// Hann-windowed STFT magnitudes; frames = floor((N - frame_len) / hop) + 1.
Spectrogram Stft(const Waveform &wave, int frame_len, int hop, int fft_size);

/// Triangular mel filters (2595 log10(1 + f/700)) spanning 0 Hz to Nyquist,
/// n_mels x num_bins.  Cached per configuration; the returned matrix is
/// shared and read-only.
std::shared_ptr<const Matrix> MelFilterbank(int n_mels, int num_bins,
                                            int sample_rate);

/// log(max(mel energy, floor)) of the squared magnitudes.
FeatureMatrix LogMelFbank(const Spectrogram &spec, int n_mels = 80,
                          double floor = 1e-10);

/// omega + 2 atan(-alpha sin(omega) / (1 + alpha cos(omega))).
double BilinearWarpFrequency(double omega, double alpha);

/// Re-samples every frame so that spectral content moves along the warp:
/// the output at frequency w reads the input at BilinearWarpFrequency(w,
/// alpha), so a peak at w0 lands at BilinearWarpFrequency(w0, -alpha), which
/// is higher than w0 for alpha > 0.  Linear interpolation between bins; the
/// DC and Nyquist bins are copied exactly.
Spectrogram WarpSpectrogram(const Spectrogram &spec, const WarpConfig &cfg);

/// Waveform -> log mel features.
FeatureMatrix ComputeFeatures(const Waveform &wave, const FeatureConfig &cfg);

/// Waveform -> warped log mel features.
FeatureMatrix ComputeWarpedFeatures(const Waveform &wave,
                                    const FeatureConfig &cfg,
                                    const WarpConfig &warp);

// ---------------------------------------------------------------------------
// Feature files.  Layout (little-endian):
//   char[8] magic "TSAFEAT\0" | u32 version | u32 frames | u32 dims |
//   u32 frame_len | u32 hop | u32 sample_rate | frames*dims float32 row-major

inline constexpr uint32_t kFeatureFileVersion = 1;

void WriteFeatures(const std::string &path, const FeatureMatrix &features);
FeatureMatrix ReadFeatures(const std::string &path);
/// Reads only the header; cheap frame-count checks.
FeatureMatrix ReadFeatureHeader(const std::string &path);

std::string EncodeFeatures(const FeatureMatrix &features);
FeatureMatrix DecodeFeatures(const std::string &bytes,
                             const std::string &origin = "<memory>");

/// Rounds values to float32, matching what a write/read cycle produces.
void RoundToFloat(FeatureMatrix *features);

}  // namespace tsadapt

#endif  // TSADAPT_FEATURES_H_
