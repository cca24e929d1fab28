// core/src/corpus.cc

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

#include "tsadapt/corpus.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace tsadapt {

namespace fs = std::filesystem;

namespace {

std::string FormatDouble(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double ParseDouble(const std::string &text, const std::string &what) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception &) {
  }
  throw Error(Msg() << what << " is not a number: '" << text << "'");
}

long long ParseInt(const std::string &text, const std::string &what) {
  try {
    size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception &) {
  }
  throw Error(Msg() << what << " is not an integer: '" << text << "'");
}

std::string AbsPath(const fs::path &p) {
  return fs::absolute(p).lexically_normal().string();
}

std::string StemPath(const std::string &feature_path) {
  fs::path p(feature_path);
  return (p.parent_path() / p.stem()).string();
}

void EnsureDir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  TSADAPT_CHECK(!ec, "cannot create directory " << dir << ": " << ec.message());
}

void CheckField(const std::string &value, const char *what) {
  TSADAPT_CHECK(!value.empty(), "manifest " << what << " is empty");
  TSADAPT_CHECK(value.find_first_of("\t\n\r") == std::string::npos,
                "manifest " << what << " '" << value
                            << "' contains a tab or newline");
}

std::vector<std::string> Split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool IsPathKey(const std::string &key) { return key.rfind("noise.", 0) == 0; }

void AddFeatureConfig(const FeatureConfig &feat, ParallelManifest *m) {
  m->Set("feat.frame_len", std::to_string(feat.frame_len));
  m->Set("feat.hop", std::to_string(feat.hop));
  m->Set("feat.fft_size", std::to_string(feat.fft_size));
  m->Set("feat.n_mels", std::to_string(feat.n_mels));
  m->Set("feat.log_floor", FormatDouble(feat.log_floor));
}

FeatureConfig FeatureConfigFrom(const ParallelManifest &m) {
  FeatureConfig feat;
  feat.frame_len = static_cast<int>(
      ParseInt(m.Require("feat.frame_len"), "feat.frame_len"));
  feat.hop = static_cast<int>(ParseInt(m.Require("feat.hop"), "feat.hop"));
  feat.fft_size = static_cast<int>(
      ParseInt(m.Require("feat.fft_size"), "feat.fft_size"));
  feat.n_mels =
      static_cast<int>(ParseInt(m.Require("feat.n_mels"), "feat.n_mels"));
  feat.log_floor = ParseDouble(m.Require("feat.log_floor"), "feat.log_floor");
  feat.Validate();
  return feat;
}

std::string PaddedId(const std::string &prefix, int index, int count) {
  const int width = std::max<int>(4, static_cast<int>(std::to_string(count).size()));
  std::string num = std::to_string(index);
  if (static_cast<int>(num.size()) < width)
    num.insert(0, static_cast<size_t>(width) - num.size(), '0');
  return prefix + num;
}

void CopyFile(const std::string &from, const std::string &to) {
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  TSADAPT_CHECK(!ec, "cannot copy " << from << " to " << to << ": "
                                    << ec.message());
}

}  // namespace

// ---------------------------------------------------------------------------
// ParallelManifest

std::optional<std::string> ParallelManifest::Get(const std::string &key) const {
  for (const auto &[k, v] : metadata)
    if (k == key) return v;
  return std::nullopt;
}

std::string ParallelManifest::Require(const std::string &key) const {
  std::optional<std::string> v = Get(key);
  TSADAPT_CHECK(v.has_value(), "manifest metadata lacks '" << key << "'");
  return *v;
}

std::vector<std::string> ParallelManifest::GetAll(const std::string &key) const {
  std::vector<std::string> out;
  for (const auto &[k, v] : metadata)
    if (k == key) out.push_back(v);
  return out;
}

void ParallelManifest::Set(const std::string &key, const std::string &value) {
  auto it = std::find_if(metadata.begin(), metadata.end(),
                         [&](const auto &kv) { return kv.first == key; });
  if (it == metadata.end()) {
    metadata.emplace_back(key, value);
    return;
  }
  it->second = value;
  metadata.erase(std::remove_if(std::next(it), metadata.end(),
                                [&](const auto &kv) { return kv.first == key; }),
                 metadata.end());
}

void ParallelManifest::Add(const std::string &key, const std::string &value) {
  metadata.emplace_back(key, value);
}

std::vector<UtteranceRecord> ParallelManifest::Sources() const {
  std::vector<UtteranceRecord> out;
  out.reserve(pairs.size());
  for (const ManifestPair &p : pairs) out.push_back(p.source);
  return out;
}

void WriteManifest(const std::string &path, const ParallelManifest &manifest) {
  const fs::path dir = fs::absolute(path).parent_path().lexically_normal();
  if (!dir.empty()) EnsureDir(dir.string());
  auto rel = [&](const std::string &p) {
    return fs::path(AbsPath(p)).lexically_relative(dir).generic_string();
  };
  std::ostringstream out;
  for (const auto &[key, value] : manifest.metadata) {
    TSADAPT_CHECK(!key.empty() && key.find_first_of("=\t\n\r") == std::string::npos,
                  "bad manifest metadata key '" << key << "'");
    TSADAPT_CHECK(value.find_first_of("\n\r") == std::string::npos,
                  "manifest metadata '" << key << "' contains a newline");
    out << '#' << key << '=' << (IsPathKey(key) ? rel(value) : value) << '\n';
  }
  for (const ManifestPair &p : manifest.pairs) {
    CheckField(p.source.id, "source id");
    CheckField(p.target.id, "target id");
    CheckField(p.source.domain, "source domain");
    CheckField(p.target.domain, "target domain");
    TSADAPT_CHECK(p.source.domain.find(',') == std::string::npos &&
                      p.target.domain.find(',') == std::string::npos,
                  "domain tags may not contain ','");
    out << p.source.id << '\t' << rel(p.source.feature_path) << '\t'
        << p.target.id << '\t' << rel(p.target.feature_path) << '\t' << p.frames
        << '\t' << p.source.domain << ',' << p.target.domain << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(f.good(), "cannot open manifest " << path << " for writing");
  f << out.str();
  TSADAPT_CHECK(f.good(), "failed writing manifest " << path);
}

namespace {

UtteranceRecord ResolveRecord(const std::string &id,
                              const std::string &feature_path,
                              const std::string &domain) {
  UtteranceRecord r;
  r.id = id;
  r.feature_path = feature_path;
  r.domain = domain;
  const std::string stem = StemPath(feature_path);
  if (fs::exists(stem + ".wav")) r.wave_path = stem + ".wav";
  if (fs::exists(stem + ".lab")) r.label_path = stem + ".lab";
  return r;
}

}  // namespace

ParallelManifest ReadManifest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open manifest " << path);
  const fs::path dir = fs::absolute(path).parent_path();
  auto resolve = [&](const std::string &p) { return AbsPath(dir / p); };

  ParallelManifest m;
  std::unordered_set<std::string> target_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const size_t eq = line.find('=');
      TSADAPT_CHECK(eq != std::string::npos && eq > 1,
                    path << ":" << line_no << ": metadata line needs key=value");
      const std::string key = line.substr(1, eq - 1);
      const std::string value = line.substr(eq + 1);
      m.metadata.emplace_back(key, IsPathKey(key) ? resolve(value) : value);
      continue;
    }
    const std::vector<std::string> f = Split(line, '\t');
    TSADAPT_CHECK(f.size() == 6, path << ":" << line_no << ": expected 6 fields, got "
                                      << f.size());
    const std::vector<std::string> domains = Split(f[5], ',');
    TSADAPT_CHECK(domains.size() == 2 && !domains[0].empty() && !domains[1].empty(),
                  path << ":" << line_no
                       << ": domain field must be 'source,target'");
    ManifestPair p;
    p.source = ResolveRecord(f[0], resolve(f[1]), domains[0]);
    p.target = ResolveRecord(f[2], resolve(f[3]), domains[1]);
    const long long frames = ParseInt(f[4], Msg() << path << ":" << line_no << ": frames");
    TSADAPT_CHECK(frames >= 1, path << ":" << line_no << ": frames must be positive");
    p.frames = static_cast<int>(frames);
    TSADAPT_CHECK(target_ids.insert(p.target.id).second,
                  path << ":" << line_no << ": duplicate target id '"
                       << p.target.id << "'");
    const int src_frames = ReadFeatureHeader(p.source.feature_path).NumFrames();
    const int tgt_frames = ReadFeatureHeader(p.target.feature_path).NumFrames();
    TSADAPT_CHECK(src_frames == p.frames && tgt_frames == p.frames,
                  path << ":" << line_no << ": pair '" << p.target.id
                       << "' records " << p.frames << " frames but source has "
                       << src_frames << " and target has " << tgt_frames);
    m.pairs.push_back(std::move(p));
  }
  return m;
}

ParallelManifest CorpusManifest(const std::vector<UtteranceRecord> &records) {
  ParallelManifest m;
  m.Set("mode", "corpus");
  for (const UtteranceRecord &r : records) {
    const int frames = ReadFeatureHeader(r.feature_path).NumFrames();
    m.pairs.push_back({r, r, frames});
  }
  return m;
}

void WriteLabels(const std::string &path, const std::vector<int32_t> &labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  for (int32_t l : labels) out << l << '\n';
  TSADAPT_CHECK(out.good(), "failed writing labels " << path);
}

std::vector<int32_t> ReadLabels(const std::string &path) {
  std::ifstream in(path);
  TSADAPT_CHECK(in.good(), "cannot open label file " << path);
  std::vector<int32_t> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const long long v = ParseInt(line, Msg() << path << ":" << line_no << ": label");
    TSADAPT_CHECK(v >= 0 && v <= INT32_MAX,
                  path << ":" << line_no << ": label " << v << " out of range");
    labels.push_back(static_cast<int32_t>(v));
  }
  return labels;
}

void ParallelFor(size_t n, int jobs, const std::function<void(size_t)> &fn) {
  const size_t workers = std::min<size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (std::thread &t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Generation.

std::vector<UtteranceRecord> SynthCorpus(const SynthSpec &spec, int count,
                                         uint64_t seed,
                                         const std::string &out_dir,
                                         const FeatureConfig &feat, int jobs,
                                         const std::string &prefix) {
  spec.Validate();
  feat.Validate();
  TSADAPT_CHECK(count >= 1, "corpus count must be at least 1, got " << count);
  TSADAPT_CHECK(spec.FrameLength() == feat.frame_len &&
                    spec.FrameShift() == feat.hop,
                "synth spec frames (" << spec.FrameLength() << "/"
                                      << spec.FrameShift()
                                      << ") differ from feature config ("
                                      << feat.frame_len << "/" << feat.hop << ")");
  EnsureDir(out_dir);
  const std::string dir = AbsPath(out_dir);
  std::vector<UtteranceRecord> records(static_cast<size_t>(count));
  ParallelFor(records.size(), jobs, [&](size_t i) {
    UtteranceRecord &r = records[i];
    r.id = PaddedId(prefix, static_cast<int>(i), count);
    r.domain = "clean";
    const std::string stem = (fs::path(dir) / r.id).string();
    r.wave_path = stem + ".wav";
    r.feature_path = stem + ".feat";
    r.label_path = stem + ".lab";
    try {
      LabeledUtterance u = SynthUtterance(spec, DeriveSeed(seed, i));
      const Waveform wave = QuantizePcm16(u.wave);
      const FeatureMatrix feats = ComputeFeatures(wave, feat);
      TSADAPT_CHECK(feats.NumFrames() == static_cast<int>(u.frame_labels.size()),
                    feats.NumFrames() << " feature frames but "
                                      << u.frame_labels.size() << " labels");
      WriteWav(r.wave_path, wave);
      WriteFeatures(r.feature_path, feats);
      WriteLabels(r.label_path, u.frame_labels);
    } catch (const Error &e) {
      throw Error(Msg() << "utterance '" << r.id << "': " << e.what());
    }
  });
  return records;
}

std::vector<NoiseSource> SynthNoiseSet(const std::vector<NoiseKind> &kinds,
                                       double duration_s, int sample_rate,
                                       uint64_t seed,
                                       const std::string &out_dir) {
  EnsureDir(out_dir);
  std::vector<NoiseSource> out;
  for (NoiseKind kind : kinds) {
    NoiseSource n;
    n.id = std::string(NoiseKindName(kind));
    n.path = AbsPath(fs::path(out_dir) / (n.id + ".wav"));
    n.wave = QuantizePcm16(SynthNoise(kind, duration_s, sample_rate, seed));
    WriteWav(n.path, n.wave);
    out.push_back(std::move(n));
  }
  return out;
}

std::vector<NoiseSource> LoadNoiseDir(const std::string &dir) {
  TSADAPT_CHECK(fs::is_directory(dir), "noise directory " << dir
                                                          << " does not exist");
  std::vector<std::string> paths;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      paths.push_back(AbsPath(entry.path()));
  std::sort(paths.begin(), paths.end());
  TSADAPT_CHECK(!paths.empty(), "noise directory " << dir << " has no .wav files");
  std::vector<NoiseSource> out;
  for (const std::string &p : paths)
    out.push_back({fs::path(p).stem().string(), p, ReadWav(p)});
  return out;
}

std::string NoiseDraw::ToString() const {
  return target_id + "," + source_id + "," + noise_id + "," +
         std::to_string(offset) + "," + FormatDouble(snr_db);
}

NoiseDraw NoiseDraw::Parse(const std::string &text) {
  const std::vector<std::string> f = Split(text, ',');
  TSADAPT_CHECK(f.size() == 5, "noise draw '" << text << "' needs 5 fields");
  NoiseDraw d;
  d.target_id = f[0];
  d.source_id = f[1];
  d.noise_id = f[2];
  const long long off = ParseInt(f[3], "noise draw offset");
  TSADAPT_CHECK(off >= 0, "noise draw offset is negative");
  d.offset = static_cast<size_t>(off);
  d.snr_db = ParseDouble(f[4], "noise draw snr");
  return d;
}

std::vector<NoiseDraw> NoiseDraws(const ParallelManifest &manifest) {
  std::vector<NoiseDraw> out;
  for (const std::string &d : manifest.GetAll("draw"))
    out.push_back(NoiseDraw::Parse(d));
  return out;
}

namespace {

struct NoisyJob {
  size_t source_index;  // into the clean record list
  NoiseDraw draw;
};

std::string DrawKey(const NoiseDraw &d) {
  return d.source_id + "|" + d.noise_id + "|" + std::to_string(d.offset) + "|" +
         FormatDouble(d.snr_db);
}

NoiseDraw DrawNoise(Rng *rng, const UtteranceRecord &src, size_t clean_len,
                    const std::vector<NoiseSource> &noises, double snr_lo,
                    double snr_hi) {
  NoiseDraw d;
  d.source_id = src.id;
  const size_t n = rng->UniformInt(noises.size());
  d.noise_id = noises[n].id;
  const size_t noise_len = noises[n].wave.size();
  TSADAPT_CHECK(noise_len >= clean_len,
                "noise '" << noises[n].id << "' (" << noise_len
                          << " samples) is shorter than utterance '" << src.id
                          << "' (" << clean_len << ")");
  d.offset = rng->UniformInt(noise_len - clean_len + 1);
  d.snr_db = snr_lo == snr_hi ? snr_lo : rng->Uniform(snr_lo, snr_hi);
  return d;
}

std::string SnrDomain(double snr_db) {
  return "noisy-snr" + std::to_string(static_cast<int>(std::lround(snr_db)));
}

// Mixes and featurises one pair; the source side is the clean record as is.
ManifestPair MakeNoisyPair(const UtteranceRecord &src, const Waveform &clean,
                           const NoiseSource &noise, const NoiseDraw &draw,
                           const std::string &dir, const FeatureConfig &feat) {
  ManifestPair p;
  p.source = src;
  p.target.id = draw.target_id;
  p.target.domain = SnrDomain(draw.snr_db);
  const std::string stem = (fs::path(dir) / draw.target_id).string();
  p.target.wave_path = stem + ".wav";
  p.target.feature_path = stem + ".feat";
  const Waveform mixed =
      QuantizePcm16(MixAtSnr(clean, noise.wave, draw.snr_db, draw.offset));
  const FeatureMatrix feats = ComputeFeatures(mixed, feat);
  const int src_frames = ReadFeatureHeader(src.feature_path).NumFrames();
  TSADAPT_CHECK(src_frames == feats.NumFrames(),
                "source has " << src_frames << " frames, mixture has "
                              << feats.NumFrames());
  p.frames = feats.NumFrames();
  WriteWav(p.target.wave_path, mixed);
  WriteFeatures(p.target.feature_path, feats);
  if (src.HasLabels()) {
    p.target.label_path = stem + ".lab";
    CopyFile(src.label_path, p.target.label_path);
  }
  return p;
}

std::vector<ManifestPair> RunNoisyJobs(const std::vector<NoisyJob> &jobs_list,
                                       const std::vector<UtteranceRecord> &clean,
                                       const std::vector<NoiseSource> &noises,
                                       const std::string &dir,
                                       const FeatureConfig &feat, int jobs) {
  std::vector<ManifestPair> pairs(jobs_list.size());
  ParallelFor(jobs_list.size(), jobs, [&](size_t j) {
    const NoisyJob &job = jobs_list[j];
    const UtteranceRecord &src = clean[job.source_index];
    try {
      TSADAPT_CHECK(!src.wave_path.empty(), "no waveform on disk");
      const Waveform wave = ReadWav(src.wave_path);
      const auto it = std::find_if(noises.begin(), noises.end(), [&](const auto &n) {
        return n.id == job.draw.noise_id;
      });
      TSADAPT_CHECK(it != noises.end(), "unknown noise '" << job.draw.noise_id << "'");
      pairs[j] = MakeNoisyPair(src, wave, *it, job.draw, dir, feat);
    } catch (const Error &e) {
      throw Error(Msg() << "utterance '" << src.id << "': " << e.what());
    }
  });
  return pairs;
}

size_t WaveLength(const UtteranceRecord &r) {
  TSADAPT_CHECK(!r.wave_path.empty(),
                "utterance '" << r.id << "' has no waveform on disk");
  return ReadWav(r.wave_path).size();
}

}  // namespace

ParallelManifest BuildNoisyParallel(const std::vector<UtteranceRecord> &clean,
                                    const std::vector<NoiseSource> &noises,
                                    double snr_lo, double snr_hi, uint64_t seed,
                                    const std::string &out_dir,
                                    const FeatureConfig &feat, int jobs) {
  TSADAPT_CHECK(!clean.empty(), "no clean utterances to mix");
  TSADAPT_CHECK(!noises.empty(), "no noise recordings to mix");
  TSADAPT_CHECK(std::isfinite(snr_lo) && std::isfinite(snr_hi) && snr_lo <= snr_hi,
                "SNR range must satisfy lo <= hi, got " << snr_lo << ":" << snr_hi);
  feat.Validate();
  std::set<std::string> noise_ids;
  for (const NoiseSource &n : noises) {
    TSADAPT_CHECK(!n.id.empty() && n.id.find_first_of(",\t\n|=") == std::string::npos,
                  "bad noise id '" << n.id << "'");
    TSADAPT_CHECK(noise_ids.insert(n.id).second, "duplicate noise id '" << n.id << "'");
    TSADAPT_CHECK(!n.path.empty(), "noise '" << n.id << "' has no path on disk");
  }
  EnsureDir(out_dir);
  const std::string dir = AbsPath(out_dir);

  std::vector<NoisyJob> work(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) {
    Rng rng(DeriveSeed(seed, 0, i));
    NoiseDraw d = DrawNoise(&rng, clean[i], WaveLength(clean[i]), noises,
                            snr_lo, snr_hi);
    d.target_id = clean[i].id + "~n0";
    work[i] = {i, d};
  }

  ParallelManifest m;
  m.Set("mode", "noisy");
  m.Set("seed", std::to_string(seed));
  m.Set("snr_lo", FormatDouble(snr_lo));
  m.Set("snr_hi", FormatDouble(snr_hi));
  m.Set("rounds", "1");
  AddFeatureConfig(feat, &m);
  for (const NoiseSource &n : noises) m.Add("noise." + n.id, AbsPath(n.path));
  for (const NoisyJob &j : work) m.Add("draw", j.draw.ToString());
  m.pairs = RunNoisyJobs(work, clean, noises, dir, feat, jobs);
  return m;
}

ParallelManifest ScaleCorpus(const ParallelManifest &manifest, int factor,
                             uint64_t seed, const std::string &out_dir,
                             int jobs) {
  TSADAPT_CHECK(factor >= 1, "scale factor must be a positive integer, got "
                                 << factor);
  if (factor == 1) return manifest;
  const std::optional<std::string> mode = manifest.Get("mode");
  TSADAPT_CHECK(mode.has_value(), "manifest has no generation metadata (mode)");
  TSADAPT_CHECK(*mode == "noisy", "scale_corpus regenerates noise draws; mode '"
                                      << *mode << "' cannot be scaled");
  const double snr_lo = ParseDouble(manifest.Require("snr_lo"), "snr_lo");
  const double snr_hi = ParseDouble(manifest.Require("snr_hi"), "snr_hi");
  const int rounds =
      static_cast<int>(ParseInt(manifest.Require("rounds"), "rounds"));
  TSADAPT_CHECK(rounds >= 1, "manifest rounds must be positive");
  const FeatureConfig feat = FeatureConfigFrom(manifest);
  std::vector<NoiseSource> noises;
  for (const auto &[key, value] : manifest.metadata)
    if (IsPathKey(key)) noises.push_back({key.substr(6), value, ReadWav(value)});
  TSADAPT_CHECK(!noises.empty(), "manifest metadata lists no noise recordings");
  const std::vector<NoiseDraw> existing = NoiseDraws(manifest);
  TSADAPT_CHECK(existing.size() == manifest.size(),
                "manifest records " << existing.size() << " draws for "
                                    << manifest.size() << " pairs");

  // Distinct sources, in order of first appearance.
  std::vector<UtteranceRecord> sources;
  std::set<std::string> seen_sources;
  for (const ManifestPair &p : manifest.pairs)
    if (seen_sources.insert(p.source.id).second) sources.push_back(p.source);
  TSADAPT_CHECK(manifest.size() == sources.size() * static_cast<size_t>(rounds),
                "manifest has " << manifest.size() << " pairs, expected "
                                << rounds << " rounds of " << sources.size()
                                << " sources");
  std::vector<size_t> lengths(sources.size());
  ParallelFor(sources.size(), jobs,
              [&](size_t i) { lengths[i] = WaveLength(sources[i]); });

  std::unordered_set<std::string> used;
  for (const NoiseDraw &d : existing) used.insert(DrawKey(d));
  std::vector<NoisyJob> work;
  const int new_rounds = rounds * (factor - 1);
  for (int r = rounds; r < rounds + new_rounds; ++r) {
    for (size_t i = 0; i < sources.size(); ++i) {
      Rng rng(DeriveSeed(seed, static_cast<uint64_t>(r), i));
      NoiseDraw d;
      int attempts = 0;
      do {
        TSADAPT_CHECK(++attempts <= 1000, "cannot find a fresh noise draw for '"
                                              << sources[i].id << "'");
        d = DrawNoise(&rng, sources[i], lengths[i], noises, snr_lo, snr_hi);
      } while (!used.insert(DrawKey(d)).second);
      d.target_id = sources[i].id + "~n" + std::to_string(r);
      work.push_back({i, d});
    }
  }
  EnsureDir(out_dir);
  ParallelManifest m = manifest;
  m.Set("rounds", std::to_string(rounds + new_rounds));
  m.Add("scale", std::to_string(factor) + "," + std::to_string(seed));
  for (const NoisyJob &j : work) m.Add("draw", j.draw.ToString());
  std::vector<ManifestPair> fresh =
      RunNoisyJobs(work, sources, noises, AbsPath(out_dir), feat, jobs);
  m.pairs.insert(m.pairs.end(), fresh.begin(), fresh.end());
  return m;
}

ParallelManifest BuildWarpedParallel(const std::vector<UtteranceRecord> &adults,
                                     double alpha, uint64_t seed,
                                     const std::string &out_dir,
                                     const FeatureConfig &feat, int jobs) {
  TSADAPT_CHECK(!adults.empty(), "no utterances to warp");
  WarpConfig warp{alpha};
  warp.Validate();
  feat.Validate();
  EnsureDir(out_dir);
  const std::string dir = AbsPath(out_dir);
  ParallelManifest m;
  m.Set("mode", "warped");
  m.Set("seed", std::to_string(seed));
  m.Set("alpha", FormatDouble(alpha));
  AddFeatureConfig(feat, &m);
  m.pairs.resize(adults.size());
  ParallelFor(adults.size(), jobs, [&](size_t i) {
    const UtteranceRecord &src = adults[i];
    try {
      TSADAPT_CHECK(!src.wave_path.empty(), "no waveform on disk");
      const Waveform wave = ReadWav(src.wave_path);
      const FeatureMatrix warped = ComputeWarpedFeatures(wave, feat, warp);
      const int src_frames = ReadFeatureHeader(src.feature_path).NumFrames();
      TSADAPT_CHECK(src_frames == warped.NumFrames(),
                    "source has " << src_frames << " frames, warped has "
                                  << warped.NumFrames());
      ManifestPair &p = m.pairs[i];
      p.source = src;
      p.frames = warped.NumFrames();
      p.target.id = src.id + "~w";
      p.target.domain = "warped";
      const std::string stem = (fs::path(dir) / p.target.id).string();
      p.target.feature_path = stem + ".feat";
      WriteFeatures(p.target.feature_path, warped);
      if (src.HasLabels()) {
        p.target.label_path = stem + ".lab";
        CopyFile(src.label_path, p.target.label_path);
      }
    } catch (const Error &e) {
      throw Error(Msg() << "utterance '" << src.id << "': " << e.what());
    }
  });
  return m;
}

ParallelManifest FilterByDomainClassifier(const ParallelManifest &manifest,
                                          const Network &clf, int accept_class,
                                          double threshold, ManifestSide side) {
  TSADAPT_CHECK(accept_class >= 0 && accept_class < clf.OutputDim(),
                "accept_class " << accept_class << " outside classifier output [0, "
                                << clf.OutputDim() << ")");
  TSADAPT_CHECK(threshold >= 0.0 && threshold <= 1.0,
                "threshold must be in [0, 1], got " << threshold);
  TSADAPT_CHECK(!manifest.pairs.empty(), "cannot filter an empty manifest");
  ParallelManifest out;
  out.metadata = manifest.metadata;
  for (const ManifestPair &p : manifest.pairs) {
    const UtteranceRecord &r = side == ManifestSide::kSource ? p.source : p.target;
    const FeatureMatrix feats = ReadFeatures(r.feature_path);
    TSADAPT_CHECK(feats.Dim() * clf.context().Width() == clf.InputDim(),
                  "classifier expects " << clf.FeatureDim() << "-dim features, '"
                                        << r.id << "' has " << feats.Dim());
    const double score = Forward(clf, feats).values().col(accept_class).mean();
    if (score >= threshold) out.pairs.push_back(p);
  }
  out.Set("filter.accept_class", std::to_string(accept_class));
  out.Set("filter.threshold", FormatDouble(threshold));
  out.Set("filter.side", side == ManifestSide::kSource ? "source" : "target");
  out.Set("filter.retained_fraction",
          FormatDouble(static_cast<double>(out.size()) / manifest.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Loading.

LabeledFeatures LoadUtterance(const UtteranceRecord &record) {
  LabeledFeatures u;
  u.id = record.id;
  u.features = ReadFeatures(record.feature_path);
  if (record.HasLabels()) {
    u.labels = ReadLabels(record.label_path);
    TSADAPT_CHECK(static_cast<int>(u.labels.size()) == u.features.NumFrames(),
                  "utterance '" << record.id << "' has " << u.labels.size()
                                << " labels for " << u.features.NumFrames()
                                << " frames");
  }
  return u;
}

std::vector<LabeledFeatures> LoadUtterances(
    const std::vector<UtteranceRecord> &records, int jobs) {
  std::vector<LabeledFeatures> out(records.size());
  ParallelFor(records.size(), jobs,
              [&](size_t i) { out[i] = LoadUtterance(records[i]); });
  return out;
}

ParallelData LoadParallelData(const ParallelManifest &manifest, int jobs) {
  ParallelData data(manifest.size());
  ParallelFor(manifest.size(), jobs, [&](size_t i) {
    const ManifestPair &p = manifest.pairs[i];
    FeaturePair &fp = data[i];
    fp.id = p.target.id;
    fp.source = ReadFeatures(p.source.feature_path);
    LabeledFeatures tgt = LoadUtterance(p.target);
    fp.target = std::move(tgt.features);
    fp.target_labels = std::move(tgt.labels);
    TSADAPT_CHECK(fp.source.NumFrames() == p.frames && fp.target.NumFrames() == p.frames,
                  "pair '" << p.target.id << "' does not have the recorded "
                           << p.frames << " frames");
    CheckAligned(fp);
  });
  return data;
}

}  // namespace tsadapt
