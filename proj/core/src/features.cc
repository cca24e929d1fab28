// core/src/features.cc

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

#include "tsadapt/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace tsadapt {

void WarpConfig::Validate() const {
  TSADAPT_CHECK(std::isfinite(alpha) && std::abs(alpha) < 1.0,
                "warp factor alpha must satisfy |alpha| < 1, got " << alpha);
}

void FeatureConfig::Validate() const {
  TSADAPT_CHECK(hop >= 1 && frame_len >= hop,
                "feature config needs frame_len >= hop >= 1");
  TSADAPT_CHECK(fft_size >= frame_len,
                "fft_size " << fft_size << " is smaller than frame_len "
                            << frame_len);
  TSADAPT_CHECK(n_mels >= 1, "n_mels must be at least 1");
  TSADAPT_CHECK(n_mels <= fft_size / 2 + 1,
                "n_mels " << n_mels << " exceeds the bin count "
                          << fft_size / 2 + 1);
  TSADAPT_CHECK(log_floor > 0.0, "log floor must be positive");
}

namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and then executed with the new-array interface, which is.
class RealFft {
 public:
  static const RealFft &ForSize(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto &slot = cache[n];
    if (!slot) slot.reset(new RealFft(n));
    return *slot;
  }

  ~RealFft() { fftw_destroy_plan(plan_); }

  // `in` and `out` must come from fftw_malloc.
  void Execute(double *in, fftw_complex *out) const {
    fftw_execute_dft_r2c(plan_, in, out);
  }

 private:
  explicit RealFft(int n) {
    double *in = fftw_alloc_real(n);
    fftw_complex *out = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    TSADAPT_CHECK(plan_ != nullptr, "FFTW failed to plan size " << n);
  }

  fftw_plan plan_;
};

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

}  // namespace

Spectrogram Stft(const Waveform &wave, int frame_len, int hop, int fft_size) {
  TSADAPT_CHECK(hop >= 1 && frame_len >= hop,
                "STFT needs frame_len >= hop >= 1 (frame_len " << frame_len
                                                               << ", hop "
                                                               << hop << ")");
  TSADAPT_CHECK(fft_size >= frame_len,
                "STFT fft_size " << fft_size << " < frame_len " << frame_len);
  wave.Validate();
  TSADAPT_CHECK(wave.size() >= static_cast<size_t>(frame_len),
                "waveform of " << wave.size()
                               << " samples is shorter than one frame ("
                               << frame_len << ")");
  const int frames = NumFrames(wave.size(), frame_len, hop);
  const int bins = fft_size / 2 + 1;

  std::vector<double> window(frame_len);
  if (frame_len == 1) {
    window[0] = 1.0;
  } else {
    for (int i = 0; i < frame_len; ++i)
      window[i] =
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (frame_len - 1));
  }

  Spectrogram spec;
  spec.magnitudes.resize(frames, bins);
  spec.bin_hz = static_cast<double>(wave.sample_rate) / fft_size;
  spec.frame_len = frame_len;
  spec.hop = hop;
  spec.fft_size = fft_size;
  spec.sample_rate = wave.sample_rate;

  const RealFft &fft = RealFft::ForSize(fft_size);
  double *in = fftw_alloc_real(fft_size);
  fftw_complex *out = fftw_alloc_complex(bins);
  for (int t = 0; t < frames; ++t) {
    const double *src = wave.samples.data() + static_cast<size_t>(t) * hop;
    for (int i = 0; i < frame_len; ++i) in[i] = src[i] * window[i];
    std::fill(in + frame_len, in + fft_size, 0.0);
    fft.Execute(in, out);
    for (int k = 0; k < bins; ++k)
      spec.magnitudes(t, k) = std::hypot(out[k][0], out[k][1]);
  }
  fftw_free(in);
  fftw_free(out);
  return spec;
}

std::shared_ptr<const Matrix> MelFilterbank(int n_mels, int num_bins,
                                            int sample_rate) {
  TSADAPT_CHECK(n_mels >= 1, "n_mels must be at least 1");
  TSADAPT_CHECK(num_bins >= 2, "filterbank needs at least 2 bins");
  TSADAPT_CHECK(n_mels <= num_bins, "n_mels " << n_mels
                                              << " exceeds the bin count "
                                              << num_bins);
  TSADAPT_CHECK(sample_rate > 0, "sample rate must be positive");

  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const Matrix>>
      cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(n_mels, num_bins, sample_rate);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const double nyquist = sample_rate / 2.0;
  const double mel_hi = HzToMel(nyquist);
  const double mel_step = mel_hi / (n_mels + 1);
  auto bank = std::make_shared<Matrix>(Matrix::Zero(n_mels, num_bins));
  for (int j = 0; j < num_bins; ++j) {
    const double mel = HzToMel(nyquist * j / (num_bins - 1));
    for (int k = 0; k < n_mels; ++k) {
      const double left = k * mel_step;
      const double centre = (k + 1) * mel_step;
      const double right = (k + 2) * mel_step;
      if (mel > left && mel < right) {
        (*bank)(k, j) = mel <= centre ? (mel - left) / mel_step
                                      : (right - mel) / mel_step;
      }
    }
  }
  for (int k = 0; k < n_mels; ++k)
    TSADAPT_CHECK(bank->row(k).sum() > 0.0,
                  "mel filter " << k << " covers no FFT bin; use fewer mels "
                                   "or a larger fft_size");
  cache.emplace(key, bank);
  return bank;
}

FeatureMatrix LogMelFbank(const Spectrogram &spec, int n_mels, double floor) {
  TSADAPT_CHECK(floor > 0.0, "log floor must be positive");
  TSADAPT_CHECK(n_mels >= 1, "n_mels must be at least 1");
  TSADAPT_CHECK(n_mels <= spec.NumBins(),
                "n_mels " << n_mels << " exceeds the bin count "
                          << spec.NumBins());
  std::shared_ptr<const Matrix> bank =
      MelFilterbank(n_mels, spec.NumBins(), spec.sample_rate);
  const Matrix power = spec.magnitudes.array().square().matrix();
  FeatureMatrix feats;
  feats.values = power * bank->transpose();
  feats.values = feats.values.array().max(floor).log().matrix();
  feats.frame_len = spec.frame_len;
  feats.hop = spec.hop;
  feats.sample_rate = spec.sample_rate;
  return feats;
}

double BilinearWarpFrequency(double omega, double alpha) {
  TSADAPT_CHECK(std::isfinite(alpha) && std::abs(alpha) < 1.0,
                "warp factor alpha must satisfy |alpha| < 1, got " << alpha);
  TSADAPT_CHECK(omega >= 0.0 && omega <= std::numbers::pi,
                "omega must lie in [0, pi], got " << omega);
  const double warped =
      omega + 2.0 * std::atan(-alpha * std::sin(omega) /
                              (1.0 + alpha * std::cos(omega)));
  return std::clamp(warped, 0.0, std::numbers::pi);
}

Spectrogram WarpSpectrogram(const Spectrogram &spec, const WarpConfig &cfg) {
  cfg.Validate();
  Spectrogram out = spec;
  const int bins = spec.NumBins();
  if (cfg.alpha == 0.0 || bins < 3) return out;

  // Source position (in bins) for every output bin; shared by all frames.
  std::vector<int> lower(bins);
  std::vector<double> frac(bins);
  for (int j = 1; j + 1 < bins; ++j) {
    const double omega = std::numbers::pi * j / (bins - 1);
    const double pos =
        BilinearWarpFrequency(omega, cfg.alpha) / std::numbers::pi * (bins - 1);
    const int i0 = std::min(static_cast<int>(std::floor(pos)), bins - 2);
    lower[j] = i0;
    frac[j] = pos - i0;
  }
  for (int t = 0; t < spec.NumFrames(); ++t) {
    for (int j = 1; j + 1 < bins; ++j) {
      const double a = spec.magnitudes(t, lower[j]);
      const double b = spec.magnitudes(t, lower[j] + 1);
      out.magnitudes(t, j) = a + frac[j] * (b - a);
    }
  }
  return out;
}

FeatureMatrix ComputeFeatures(const Waveform &wave, const FeatureConfig &cfg) {
  cfg.Validate();
  return LogMelFbank(Stft(wave, cfg.frame_len, cfg.hop, cfg.fft_size),
                     cfg.n_mels, cfg.log_floor);
}

FeatureMatrix ComputeWarpedFeatures(const Waveform &wave,
                                    const FeatureConfig &cfg,
                                    const WarpConfig &warp) {
  cfg.Validate();
  warp.Validate();
  return LogMelFbank(
      WarpSpectrogram(Stft(wave, cfg.frame_len, cfg.hop, cfg.fft_size), warp),
      cfg.n_mels, cfg.log_floor);
}

// ---------------------------------------------------------------------------
// Feature files.

namespace {

constexpr char kFeatureMagic[8] = {'T', 'S', 'A', 'F', 'E', 'A', 'T', '\0'};
constexpr size_t kFeatureHeaderBytes = 8 + 6 * 4;

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(const char *p) {
  const auto *u = reinterpret_cast<const unsigned char *>(p);
  return u[0] | (u[1] << 8) | (u[2] << 16) |
         (static_cast<uint32_t>(u[3]) << 24);
}

FeatureMatrix DecodeHeader(const std::string &bytes, const std::string &origin,
                           uint32_t *frames, uint32_t *dims) {
  TSADAPT_CHECK(bytes.size() >= kFeatureHeaderBytes,
                "feature file " << origin << " is truncated (no header)");
  TSADAPT_CHECK(std::memcmp(bytes.data(), kFeatureMagic, 8) == 0,
                "feature file " << origin << " has a bad magic string");
  const char *p = bytes.data() + 8;
  const uint32_t version = GetU32(p);
  TSADAPT_CHECK(version == kFeatureFileVersion,
                "feature file " << origin << " has unsupported version "
                                << version);
  *frames = GetU32(p + 4);
  *dims = GetU32(p + 8);
  FeatureMatrix f;
  f.frame_len = static_cast<int>(GetU32(p + 12));
  f.hop = static_cast<int>(GetU32(p + 16));
  f.sample_rate = static_cast<int>(GetU32(p + 20));
  TSADAPT_CHECK(*frames >= 1 && *dims >= 1,
                "feature file " << origin << " declares an empty matrix");
  return f;
}

std::string ReadFileBytes(const std::string &path, size_t limit) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open feature file " << path);
  std::string bytes;
  if (limit == 0) {
    bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());
  } else {
    bytes.resize(limit);
    in.read(bytes.data(), static_cast<std::streamsize>(limit));
    bytes.resize(static_cast<size_t>(in.gcount()));
  }
  return bytes;
}

}  // namespace

std::string EncodeFeatures(const FeatureMatrix &features) {
  TSADAPT_CHECK(features.NumFrames() >= 1 && features.Dim() >= 1,
                "cannot encode an empty feature matrix");
  std::string out(kFeatureMagic, 8);
  PutU32(&out, kFeatureFileVersion);
  PutU32(&out, static_cast<uint32_t>(features.NumFrames()));
  PutU32(&out, static_cast<uint32_t>(features.Dim()));
  PutU32(&out, static_cast<uint32_t>(features.frame_len));
  PutU32(&out, static_cast<uint32_t>(features.hop));
  PutU32(&out, static_cast<uint32_t>(features.sample_rate));
  out.reserve(out.size() + features.values.size() * 4);
  for (int r = 0; r < features.NumFrames(); ++r) {
    for (int c = 0; c < features.Dim(); ++c) {
      const float v = static_cast<float>(features.values(r, c));
      TSADAPT_CHECK(std::isfinite(v), "feature (" << r << ", " << c
                                                  << ") is not finite");
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      PutU32(&out, bits);
    }
  }
  return out;
}

FeatureMatrix DecodeFeatures(const std::string &bytes,
                             const std::string &origin) {
  uint32_t frames = 0, dims = 0;
  FeatureMatrix f = DecodeHeader(bytes, origin, &frames, &dims);
  const size_t expected =
      kFeatureHeaderBytes + static_cast<size_t>(frames) * dims * 4;
  TSADAPT_CHECK(bytes.size() == expected,
                "feature file " << origin << " has " << bytes.size()
                                << " bytes, header implies " << expected);
  f.values.resize(frames, dims);
  const char *p = bytes.data() + kFeatureHeaderBytes;
  for (uint32_t r = 0; r < frames; ++r) {
    for (uint32_t c = 0; c < dims; ++c, p += 4) {
      const uint32_t bits = GetU32(p);
      float v;
      std::memcpy(&v, &bits, 4);
      f.values(r, c) = v;
    }
  }
  return f;
}

void WriteFeatures(const std::string &path, const FeatureMatrix &features) {
  const std::string bytes = EncodeFeatures(features);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  TSADAPT_CHECK(out.good(), "failed writing feature file " << path);
}

FeatureMatrix ReadFeatures(const std::string &path) {
  return DecodeFeatures(ReadFileBytes(path, 0), path);
}

FeatureMatrix ReadFeatureHeader(const std::string &path) {
  uint32_t frames = 0, dims = 0;
  FeatureMatrix f =
      DecodeHeader(ReadFileBytes(path, kFeatureHeaderBytes), path, &frames,
                   &dims);
  f.values.resize(frames, dims);
  f.values.setZero();
  return f;
}

void RoundToFloat(FeatureMatrix *features) {
  features->values = features->values.cast<float>().cast<double>();
}

}  // namespace tsadapt
