// core/src/signal.cc

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

#include "tsadapt/signal.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>
#include "tsadapt/common.h"

namespace tsadapt {

void Waveform::Validate() const {
  TSADAPT_CHECK(sample_rate > 0, "waveform sample_rate must be positive, got "
                                     << sample_rate);
  TSADAPT_CHECK(!samples.empty(), "waveform has no samples");
  for (size_t i = 0; i < samples.size(); ++i)
    TSADAPT_CHECK(std::isfinite(samples[i]),
                  "waveform sample " << i << " is not finite");
}

double MeanPower(const Waveform &wave) {
  if (wave.samples.empty()) return 0.0;
  double sum = 0.0;
  for (double s : wave.samples) sum += s * s;
  return sum / static_cast<double>(wave.samples.size());
}

int NumFrames(size_t num_samples, int frame_len, int hop) {
  TSADAPT_CHECK(frame_len >= 1 && hop >= 1,
                "frame_len and hop must be positive");
  if (num_samples < static_cast<size_t>(frame_len)) return 0;
  return static_cast<int>((num_samples - frame_len) / hop) + 1;
}

// ---------------------------------------------------------------------------
// SynthSpec

int SynthSpec::FrameLength() const {
  return static_cast<int>(std::lround(frame_length_s * sample_rate));
}

int SynthSpec::FrameShift() const {
  return static_cast<int>(std::lround(frame_shift_s * sample_rate));
}

int SynthSpec::NumSamples() const {
  return static_cast<int>(std::lround(duration_s * sample_rate));
}

void SynthSpec::Validate() const {
  TSADAPT_CHECK(num_classes >= 2, "synth spec needs at least 2 classes, got "
                                      << num_classes);
  TSADAPT_CHECK(duration_s > 0.0, "synth spec duration must be positive, got "
                                      << duration_s);
  TSADAPT_CHECK(sample_rate > 0, "synth spec sample_rate must be positive");
  TSADAPT_CHECK(FrameLength() >= 1 && FrameShift() >= 1 &&
                    FrameShift() <= FrameLength(),
                "synth spec needs 1 <= frame shift <= frame length");
  TSADAPT_CHECK(NumSamples() >= FrameLength(),
                "synth spec duration is shorter than one frame");
  TSADAPT_CHECK(min_segment_s > 0.0 && max_segment_s >= min_segment_s,
                "synth spec segment range is invalid");
  TSADAPT_CHECK(edge_silence_s >= 0.0 &&
                    2.0 * edge_silence_s < duration_s,
                "synth spec edge silence leaves no room for speech");
  TSADAPT_CHECK(!HasSilenceClass() || num_classes >= 3,
                "a silence class needs at least 3 classes in total");
  TSADAPT_CHECK(f0_min_hz > 0.0 && f0_max_hz >= f0_min_hz &&
                    f0_max_hz < sample_rate / 2.0,
                "synth spec f0 range is invalid");
  TSADAPT_CHECK(segment_rms > 0.0, "synth spec segment_rms must be positive");
  TSADAPT_CHECK(unvoiced_fraction >= 0.0 && unvoiced_fraction <= 1.0,
                "synth spec unvoiced_fraction must be in [0, 1]");
  TSADAPT_CHECK(background_rms >= 0.0 && std::isfinite(background_rms),
                "synth spec background_rms must be non-negative");
  TSADAPT_CHECK(amplitude_jitter >= 0.0 && amplitude_jitter < 1.0 &&
                    formant_jitter >= 0.0 && formant_jitter < 0.5,
                "synth spec jitter out of range");
}

std::string SynthSpec::ToJson() const {
  nlohmann::ordered_json j;
  j["num_classes"] = num_classes;
  j["duration_s"] = duration_s;
  j["sample_rate"] = sample_rate;
  j["frame_length_s"] = frame_length_s;
  j["frame_shift_s"] = frame_shift_s;
  j["min_segment_s"] = min_segment_s;
  j["max_segment_s"] = max_segment_s;
  j["edge_silence_s"] = edge_silence_s;
  j["f0_min_hz"] = f0_min_hz;
  j["f0_max_hz"] = f0_max_hz;
  j["segment_rms"] = segment_rms;
  j["amplitude_jitter"] = amplitude_jitter;
  j["formant_jitter"] = formant_jitter;
  j["background_rms"] = background_rms;
  j["unvoiced_fraction"] = unvoiced_fraction;
  j["template_seed"] = template_seed;
  return j.dump(2);
}

SynthSpec SynthSpec::FromJson(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(Msg() << "synth spec is not valid JSON: " << e.what());
  }
  TSADAPT_CHECK(j.is_object(), "synth spec must be a JSON object");
  SynthSpec spec;
  auto get = [&](const char *key, auto *field) {
    if (j.contains(key)) {
      try {
        j.at(key).get_to(*field);
      } catch (const nlohmann::json::exception &e) {
        throw Error(Msg() << "synth spec field '" << key
                          << "' has the wrong type: " << e.what());
      }
    }
  };
  for (const auto &[key, value] : j.items()) {
    static const char *kKnown[] = {
        "num_classes",   "duration_s",       "sample_rate",
        "frame_length_s", "frame_shift_s",   "min_segment_s",
        "max_segment_s", "edge_silence_s",   "f0_min_hz",
        "f0_max_hz",     "segment_rms",      "amplitude_jitter",
        "formant_jitter", "background_rms", "unvoiced_fraction",
        "template_seed"};
    bool known = false;
    for (const char *k : kKnown) known = known || key == k;
    TSADAPT_CHECK(known, "synth spec has unknown field '" << key << "'");
  }
  get("num_classes", &spec.num_classes);
  get("duration_s", &spec.duration_s);
  get("sample_rate", &spec.sample_rate);
  get("frame_length_s", &spec.frame_length_s);
  get("frame_shift_s", &spec.frame_shift_s);
  get("min_segment_s", &spec.min_segment_s);
  get("max_segment_s", &spec.max_segment_s);
  get("edge_silence_s", &spec.edge_silence_s);
  get("f0_min_hz", &spec.f0_min_hz);
  get("f0_max_hz", &spec.f0_max_hz);
  get("segment_rms", &spec.segment_rms);
  get("amplitude_jitter", &spec.amplitude_jitter);
  get("background_rms", &spec.background_rms);
  get("unvoiced_fraction", &spec.unvoiced_fraction);
  get("formant_jitter", &spec.formant_jitter);
  get("template_seed", &spec.template_seed);
  return spec;
}

// ---------------------------------------------------------------------------
// Class templates and utterance synthesis.

std::vector<ClassTemplate> MakeClassTemplates(const SynthSpec &spec) {
  spec.Validate();
  Rng rng(DeriveSeed(spec.template_seed, 0x7e3a11));
  std::vector<ClassTemplate> templates;
  if (spec.HasSilenceClass()) templates.push_back(ClassTemplate{});
  const double nyquist = spec.sample_rate / 2.0;
  const double f3_hi = std::min(3600.0, 0.45 * spec.sample_rate);
  const double hf_hi = 0.45 * spec.sample_rate;
  const int num_sounding = spec.num_classes - static_cast<int>(templates.size());
  const int num_unvoiced = std::min<int>(
      num_sounding - 1,
      static_cast<int>(std::lround(spec.unvoiced_fraction * num_sounding)));
  const int first_unvoiced = spec.num_classes - num_unvoiced;
  double min_separation = 0.10;  // in natural-log frequency units
  int failures = 0;
  while (static_cast<int>(templates.size()) < spec.num_classes) {
    const bool voiced = static_cast<int>(templates.size()) < first_unvoiced;
    double f1, f2;
    if (voiced) {
      f1 = std::exp(rng.Uniform(std::log(280.0), std::log(850.0)));
      const double f2_lo = std::max(1.4 * f1, 900.0);
      f2 = std::exp(rng.Uniform(std::log(f2_lo), std::log(2500.0)));
    } else {
      f1 = std::exp(rng.Uniform(std::log(2500.0), std::log(std::max(2600.0, hf_hi / 1.3))));
      f2 = std::exp(rng.Uniform(std::log(1.2 * f1), std::log(std::max(1.25 * f1, hf_hi))));
    }
    const bool has_f3 = voiced && rng.Uniform() < 0.5;
    const double f3 = rng.Uniform(2700.0, std::max(2700.0, f3_hi));
    bool distinct = f2 < nyquist;
    for (const ClassTemplate &t : templates) {
      if (t.silent() || t.voiced != voiced) continue;
      const double d = std::max(std::abs(std::log(f1 / t.formants_hz[0])),
                                std::abs(std::log(f2 / t.formants_hz[1])));
      if (d < min_separation) {
        distinct = false;
        break;
      }
    }
    if (!distinct) {
      // Very large class counts cannot all be 10% apart; relax gradually.
      if (++failures > 2000) {
        min_separation *= 0.9;
        failures = 0;
      }
      continue;
    }
    ClassTemplate t;
    t.voiced = voiced;
    t.formants_hz = {f1, f2};
    if (has_f3 && f3 < nyquist) t.formants_hz.push_back(f3);
    for (double f : t.formants_hz)
      t.bandwidths_hz.push_back(voiced ? 50.0 + 0.06 * f : 150.0 + 0.1 * f);
    templates.push_back(std::move(t));
  }
  return templates;
}

namespace {

// Two-pole resonator cascade (one section per formant), run in place.
void ApplyResonators(const std::vector<double> &freqs,
                     const std::vector<double> &bandwidths, int sample_rate,
                     std::vector<double> *signal) {
  for (size_t k = 0; k < freqs.size(); ++k) {
    const double r =
        std::exp(-std::numbers::pi * bandwidths[k] / sample_rate);
    const double theta = 2.0 * std::numbers::pi * freqs[k] / sample_rate;
    const double a1 = 2.0 * r * std::cos(theta);
    const double a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (double &x : *signal) {
      const double y = x + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      x = y;
    }
  }
}

}  // namespace

LabeledUtterance SynthUtterance(const SynthSpec &spec, uint64_t seed) {
  spec.Validate();
  const std::vector<ClassTemplate> templates = MakeClassTemplates(spec);
  const int sr = spec.sample_rate;
  const int num_samples = spec.NumSamples();
  const int silence =
      static_cast<int>(std::lround(spec.edge_silence_s * sr));
  const int first_sounding_class = spec.HasSilenceClass() ? 1 : 0;
  const int num_sounding = spec.num_classes - first_sounding_class;

  LabeledUtterance utt;
  utt.wave.sample_rate = sr;
  utt.wave.samples.assign(num_samples, 0.0);
  // Class owning each sample; silence (or class 0) outside voiced segments.
  std::vector<int32_t> owner(num_samples, 0);

  Rng rng(DeriveSeed(seed, 0x5e9));
  const int voiced_end = num_samples - silence;
  int pos = silence;
  while (pos < voiced_end) {
    const int len = std::max<int>(
        1, static_cast<int>(std::lround(
               rng.Uniform(spec.min_segment_s, spec.max_segment_s) * sr)));
    const int end = std::min(pos + len, voiced_end);
    const int cls =
        first_sounding_class + static_cast<int>(rng.UniformInt(num_sounding));
    const ClassTemplate &tmpl = templates[cls];

    const double f0 = rng.Uniform(spec.f0_min_hz, spec.f0_max_hz);
    std::vector<double> freqs = tmpl.formants_hz;
    for (double &f : freqs)
      f *= 1.0 + rng.Uniform(-spec.formant_jitter, spec.formant_jitter);
    const double rms =
        spec.segment_rms *
        (1.0 + rng.Uniform(-spec.amplitude_jitter, spec.amplitude_jitter));

    std::vector<double> segment(end - pos, 0.0);
    if (tmpl.voiced) {
      const double period = sr / f0;
      for (double t = rng.Uniform(0.0, period); t < segment.size(); t += period)
        segment[static_cast<size_t>(t)] = 1.0;
    } else {
      for (double &x : segment) x = rng.Gaussian();
    }
    ApplyResonators(freqs, tmpl.bandwidths_hz, sr, &segment);
    double power = 0.0;
    for (double s : segment) power += s * s;
    power /= static_cast<double>(segment.size());
    const double scale = power > 0.0 ? rms / std::sqrt(power) : 0.0;
    for (int i = pos; i < end; ++i) {
      utt.wave.samples[i] = scale * segment[i - pos];
      owner[i] = cls;
    }
    pos = end;
  }

  if (spec.background_rms > 0.0) {
    Rng bg(DeriveSeed(seed, 0xb6));
    for (double &s : utt.wave.samples) s += spec.background_rms * bg.Gaussian();
  }

  const int frame_len = spec.FrameLength();
  const int hop = spec.FrameShift();
  const int frames = NumFrames(num_samples, frame_len, hop);
  utt.frame_labels.resize(frames);
  for (int t = 0; t < frames; ++t)
    utt.frame_labels[t] = owner[t * hop + frame_len / 2];
  return utt;
}

// ---------------------------------------------------------------------------
// Mixing and SNR.

Waveform MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                  size_t noise_offset, double *gain) {
  clean.Validate();
  noise.Validate();
  TSADAPT_CHECK(clean.sample_rate == noise.sample_rate,
                "sample-rate mismatch: clean " << clean.sample_rate
                                               << " Hz vs noise "
                                               << noise.sample_rate << " Hz");
  TSADAPT_CHECK(noise.size() >= clean.size(),
                "noise (" << noise.size()
                          << " samples) is shorter than clean ("
                          << clean.size() << " samples)");
  TSADAPT_CHECK(noise_offset + clean.size() <= noise.size(),
                "noise offset " << noise_offset << " runs past the noise end");
  TSADAPT_CHECK(std::isfinite(snr_db), "snr_db must be finite");
  const double p_clean = MeanPower(clean);
  TSADAPT_CHECK(p_clean > 0.0, "clean waveform has zero power");
  double p_noise = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    const double s = noise.samples[noise_offset + i];
    p_noise += s * s;
  }
  p_noise /= static_cast<double>(clean.size());
  TSADAPT_CHECK(p_noise > 0.0, "noise segment has zero power");

  const double g = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  if (gain != nullptr) *gain = g;
  Waveform out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.size());
  for (size_t i = 0; i < clean.size(); ++i)
    out.samples[i] = clean.samples[i] + g * noise.samples[noise_offset + i];
  return out;
}

Waveform MixAtSnrSeeded(const Waveform &clean, const Waveform &noise,
                        double snr_db, uint64_t seed, size_t *noise_offset) {
  TSADAPT_CHECK(noise.size() >= clean.size(),
                "noise (" << noise.size()
                          << " samples) is shorter than clean ("
                          << clean.size() << " samples)");
  Rng rng(seed);
  const size_t offset = rng.UniformInt(noise.size() - clean.size() + 1);
  if (noise_offset != nullptr) *noise_offset = offset;
  return MixAtSnr(clean, noise, snr_db, offset);
}

double EstimateSnr(const Waveform &mixed, int frame_len, int hop,
                   double noise_floor) {
  mixed.Validate();
  const int frames = NumFrames(mixed.size(), frame_len, hop);
  TSADAPT_CHECK(frames >= 10, "SNR estimation needs at least 10 frames, got "
                                  << frames);
  std::vector<double> energy(frames);
  for (int t = 0; t < frames; ++t) {
    double e = 0.0;
    for (int i = 0; i < frame_len; ++i) {
      const double s = mixed.samples[static_cast<size_t>(t) * hop + i];
      e += s * s;
    }
    energy[t] = e / frame_len;
  }
  std::sort(energy.begin(), energy.end());
  const int n_noise = static_cast<int>(std::ceil(0.2 * frames));
  const int n_speech = static_cast<int>(std::ceil(0.3 * frames));
  const double noise =
      std::accumulate(energy.begin(), energy.begin() + n_noise, 0.0) / n_noise;
  const double speech =
      std::accumulate(energy.end() - n_speech, energy.end(), 0.0) / n_speech;
  if (noise < noise_floor || speech <= 0.0) return kSnrSentinelDb;
  return std::min(10.0 * std::log10(speech / noise), kSnrSentinelDb);
}

SnrBucket SnrBucketFor(double snr_db) {
  TSADAPT_CHECK(std::isfinite(snr_db), "SNR bucket needs a finite value");
  if (snr_db < 5.0) return SnrBucket::kBelow5;
  if (snr_db < 20.0) return SnrBucket::kFrom5To20;
  if (snr_db < 35.0) return SnrBucket::kFrom20To35;
  return SnrBucket::kAbove35;
}

std::string_view SnrBucketName(SnrBucket bucket) {
  switch (bucket) {
    case SnrBucket::kBelow5: return "<5dB";
    case SnrBucket::kFrom5To20: return "[5,20)dB";
    case SnrBucket::kFrom20To35: return "[20,35)dB";
    case SnrBucket::kAbove35: return ">=35dB";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Noise sources.

NoiseKind ParseNoiseKind(std::string_view name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "brown") return NoiseKind::kBrown;
  if (name == "modband") return NoiseKind::kModulatedBand;
  if (name == "hum") return NoiseKind::kHum;
  throw Error(Msg() << "unknown noise kind '" << std::string(name)
                    << "' (expected white, brown, modband or hum)");
}

std::string_view NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kBrown: return "brown";
    case NoiseKind::kModulatedBand: return "modband";
    case NoiseKind::kHum: return "hum";
  }
  return "?";
}

Waveform SynthNoise(NoiseKind kind, double duration_s, int sample_rate,
                    uint64_t seed) {
  TSADAPT_CHECK(duration_s > 0.0 && sample_rate > 0,
                "noise duration and sample rate must be positive");
  const size_t n = static_cast<size_t>(std::lround(duration_s * sample_rate));
  TSADAPT_CHECK(n > 0, "noise duration rounds to zero samples");
  Rng rng(DeriveSeed(seed, static_cast<uint64_t>(kind)));
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  switch (kind) {
    case NoiseKind::kWhite:
      for (double &s : w.samples) s = rng.Gaussian();
      break;
    case NoiseKind::kBrown: {
      double y = 0.0;
      for (double &s : w.samples) {
        y = 0.97 * y + rng.Gaussian();
        s = y;
      }
      break;
    }
    case NoiseKind::kModulatedBand: {
      for (double &s : w.samples) s = rng.Gaussian();
      ApplyResonators({1500.0}, {900.0}, sample_rate, &w.samples);
      const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      for (size_t i = 0; i < n; ++i)
        w.samples[i] *= 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * 3.0 *
                                                  i / sample_rate + phase);
      break;
    }
    case NoiseKind::kHum: {
      const double base = 120.0;
      std::vector<double> phases(12);
      for (double &p : phases) p = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      for (size_t i = 0; i < n; ++i) {
        double s = 0.05 * rng.Gaussian();
        for (int h = 1; h <= 12 && h * base < sample_rate / 2.0; ++h)
          s += std::sin(2.0 * std::numbers::pi * h * base * i / sample_rate +
                        phases[h - 1]) / h;
        w.samples[i] = s;
      }
      break;
    }
  }
  // Normalise to an RMS of 0.1 so that the 16-bit file keeps headroom.
  const double rms = std::sqrt(MeanPower(w));
  if (rms > 0.0)
    for (double &s : w.samples) s *= 0.1 / rms;
  return w;
}

// ---------------------------------------------------------------------------
// WAV I/O.

namespace {

uint32_t ReadU32(const char *p) {
  const auto *u = reinterpret_cast<const unsigned char *>(p);
  return u[0] | (u[1] << 8) | (u[2] << 16) | (static_cast<uint32_t>(u[3]) << 24);
}

uint16_t ReadU16(const char *p) {
  const auto *u = reinterpret_cast<const unsigned char *>(p);
  return static_cast<uint16_t>(u[0] | (u[1] << 8));
}

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string *out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

int16_t ToPcm16(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace

Waveform ParseWav(std::string_view bytes, const std::string &origin) {
  auto fail = [&](const std::string &field, const std::string &detail) {
    throw Error(Msg() << "unsupported WAV " << origin << ": header field '"
                      << field << "' " << detail);
  };
  if (bytes.size() < 12) fail("RIFF", "missing (file too short)");
  if (bytes.substr(0, 4) != "RIFF") fail("chunk_id", "is not 'RIFF'");
  if (bytes.substr(8, 4) != "WAVE") fail("format", "is not 'WAVE'");

  bool have_fmt = false;
  int sample_rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const uint32_t size = ReadU32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size() && id != "data")
      fail(std::string(id), "chunk size runs past end of file");
    if (id == "fmt ") {
      if (size < 16) fail("fmt_size", Msg() << "is " << size << ", expected >= 16");
      const char *f = bytes.data() + body;
      const uint16_t audio_format = ReadU16(f);
      const uint16_t channels = ReadU16(f + 2);
      const uint32_t rate = ReadU32(f + 4);
      const uint16_t block_align = ReadU16(f + 12);
      const uint16_t bits = ReadU16(f + 14);
      if (audio_format != 1)
        fail("audio_format", Msg() << "is " << audio_format << ", expected 1 (PCM)");
      if (channels != 1)
        fail("num_channels", Msg() << "is " << channels << ", expected 1 (mono)");
      if (bits != 16)
        fail("bits_per_sample", Msg() << "is " << bits << ", expected 16");
      if (block_align != 2)
        fail("block_align", Msg() << "is " << block_align << ", expected 2");
      if (rate == 0) fail("sample_rate", "is 0");
      sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail("fmt", "chunk missing before 'data'");
      const size_t avail = std::min<size_t>(size, bytes.size() - body);
      if (avail % 2 != 0) fail("data_size", "is not a multiple of 2");
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(avail / 2);
      for (size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = static_cast<int16_t>(ReadU16(bytes.data() + body + 2 * i)) /
                       32768.0;
      return w;
    }
    pos = body + size + (size & 1);
  }
  fail("data", "chunk not found");
  return {};
}

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open WAV file " << path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return ParseWav(bytes, path);
}

std::string EncodeWav(const Waveform &wave) {
  TSADAPT_CHECK(wave.sample_rate > 0, "cannot write WAV with sample_rate "
                                          << wave.sample_rate);
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (double s : wave.samples)
    PutU16(&out, static_cast<uint16_t>(ToPcm16(s)));
  return out;
}

void WriteWav(const std::string &path, const Waveform &wave) {
  const std::string bytes = EncodeWav(wave);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  TSADAPT_CHECK(out.good(), "failed writing WAV file " << path);
}

Waveform QuantizePcm16(const Waveform &wave) {
  Waveform q = wave;
  for (double &s : q.samples) s = ToPcm16(s) / 32768.0;
  return q;
}

}  // namespace tsadapt
