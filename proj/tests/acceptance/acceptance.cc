// tests/acceptance/acceptance.cc

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

// End-to-end acceptance run.  Prints one PASS/FAIL line per criterion
// (A0 to A6), each followed by indented detail lines, then a summary line.
// Exit status: 0 when every criterion passes, 3 when at least one fails,
// 1 on an unexpected error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tsadapt/common.h"
#include "tsadapt/corpus.h"
#include "tsadapt/distill.h"
#include "tsadapt/experiments.h"
#include "tsadapt/features.h"
#include "tsadapt/nnet.h"
#include "tsadapt/signal.h"

namespace tsadapt {
namespace {

namespace fs = std::filesystem;

struct Criterion {
  Criterion(std::string id_in, std::string title_in)
      : id(std::move(id_in)), title(std::move(title_in)) {}

  std::string id;
  std::string title;
  bool pass = true;
  std::vector<std::string> details;
  double seconds = 0.0;

  void Expect(bool ok, const std::string &line) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + line);
  }
  void Note(const std::string &line) { details.push_back("note  " + line); }
};

std::string Fmt(double v, const char *fmt = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::ofstream g_report;

void Emit(const std::string &text) {
  std::cout << text;
  std::cout.flush();
  if (g_report.is_open()) g_report << text << std::flush;
}

void Print(const Criterion &c) {
  std::string text = std::string(c.pass ? "PASS  " : "FAIL  ") + c.id + "  " +
                     c.title + "  (" + Fmt(c.seconds, "%.1f") + " s)\n";
  for (const std::string &d : c.details) text += "      " + d + "\n";
  Emit(text);
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Matrix RandomMatrix(Rng *rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = scale * rng->Gaussian();
  return m;
}

PosteriorMatrix RandomPosteriors(Rng *rng, int rows, int cols) {
  return PosteriorMatrix::FromLogits(RandomMatrix(rng, rows, cols, 2.0));
}

LossFunction SoftCe(const PosteriorMatrix &teacher) {
  return [teacher](const Matrix &logits, Matrix *grad) {
    LossAndGradient lg = SoftCeLoss(teacher, logits);
    if (grad != nullptr) *grad = std::move(lg.dloss_dlogits);
    return lg.loss;
  };
}

void TrendLines(const std::vector<TrendCheck> &checks,
                const std::set<std::string> &ids, Criterion *c) {
  for (const TrendCheck &t : checks) {
    if (ids.count(t.id) == 0) continue;
    const std::string line = t.id + ": " + t.description + " [" + t.detail + "]";
    switch (t.status) {
      case CheckStatus::kPass: c->Expect(true, line); break;
      case CheckStatus::kFinding: c->Note("finding (soft) " + line); break;
      case CheckStatus::kFail: c->Expect(false, line); break;
      default: c->Expect(false, CheckStatusName(t.status) + " " + line); break;
    }
  }
}

// ---------------------------------------------------------------------------

Criterion RunA0() {
  Timer timer;
  Criterion c{"A0", "math kernels"};
  Rng rng(20260101);

  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int frames = 1 + static_cast<int>(rng.UniformInt(10));
    const int classes = 2 + static_cast<int>(rng.UniformInt(30));
    const PosteriorMatrix t = RandomPosteriors(&rng, frames, classes);
    const Matrix logits = RandomMatrix(&rng, frames, classes, 3.0);
    const double ce = SoftCeLoss(t, logits).loss;
    const double kl = KlDivergence(t, PosteriorMatrix::FromLogits(logits));
    worst = std::max(worst, std::abs(ce - Entropy(t) - kl));
  }
  c.Expect(worst <= 1e-9, "soft CE - entropy = KL over 100 instances, max error " +
                              Fmt(worst, "%.3g"));

  bool gibbs = true;
  double identity = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PosteriorMatrix t = RandomPosteriors(&rng, 5, 8);
    const PosteriorMatrix s = RandomPosteriors(&rng, 5, 8);
    if (KlDivergence(t, s) < 0.0) gibbs = false;
    identity = std::max(identity, std::abs(KlDivergence(t, t)));
  }
  c.Expect(gibbs && identity <= 1e-12,
           "KL >= 0 over 100 pairs and KL(T, T) = 0 (max " +
               Fmt(identity, "%.3g") + ")");

  const double pi = 3.14159265358979323846;
  bool warp_ok = true;
  double round_trip = 0.0, identity_err = 0.0;
  for (double alpha : {-0.3, -0.1, 0.1, 0.3}) {
    if (std::abs(BilinearWarpFrequency(0.0, alpha)) > 1e-14 ||
        std::abs(BilinearWarpFrequency(pi, alpha) - pi) > 1e-14)
      warp_ok = false;
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double w = pi * i / 1000.0;
      const double v = BilinearWarpFrequency(w, alpha);
      if (v <= prev) warp_ok = false;
      prev = v;
      round_trip = std::max(
          round_trip, std::abs(BilinearWarpFrequency(v, -alpha) - w));
      identity_err = std::max(identity_err,
                              std::abs(BilinearWarpFrequency(w, 0.0) - w));
    }
  }
  c.Expect(warp_ok, "warp fixes 0 and pi and is strictly monotone on 1001 points");
  c.Expect(identity_err == 0.0 && round_trip <= 1e-12,
           "warp identity at alpha 0; +-alpha round trip max " +
               Fmt(round_trip, "%.3g"));
  // mpmath at 50 digits: pi/2 + 2 atan(0.1 sin(pi/2) / (1 - 0.1 cos(pi/2))).
  const double oracle = 1.3714590218125726;
  const double at_half = BilinearWarpFrequency(pi / 2, 0.1);
  c.Expect(std::abs(at_half - oracle) <= 1e-9,
           "warp(pi/2, 0.1) = " + Fmt(at_half, "%.16f"));

  double snr_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 500 + static_cast<int>(rng.UniformInt(4000));
    Waveform clean, noise;
    const double a = rng.Uniform(0.01, 0.5), b = rng.Uniform(0.01, 0.5);
    for (int i = 0; i < n; ++i) clean.samples.push_back(a * rng.Gaussian());
    for (int i = 0; i < n + 200; ++i) noise.samples.push_back(b * rng.Gaussian());
    const double snr = rng.Uniform(-10.0, 40.0);
    const Waveform mixed = MixAtSnr(clean, noise, snr, rng.UniformInt(201));
    double pc = 0.0, pn = 0.0;
    for (int i = 0; i < n; ++i) {
      const double added = mixed.samples[i] - clean.samples[i];
      pc += clean.samples[i] * clean.samples[i];
      pn += added * added;
    }
    snr_err = std::max(snr_err, std::abs(10.0 * std::log10(pc / pn) - snr));
  }
  c.Expect(snr_err <= 1e-9, "achieved SNR over 100 mixes in [-10, 40] dB, max error " +
                                Fmt(snr_err, "%.3g") + " dB");

  double grad_err = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    Rng r(500 + trial);
    const int feat = 3 + trial % 4, k = trial % 3, classes = 2 + trial % 5;
    const Activation act =
        trial % 3 == 0 ? Activation::kNone : Activation::kTanh;
    Network net = InitNetwork({feat * (2 * k + 1), 8, 6, classes}, act,
                              900 + trial, ContextWindow{k});
    if (trial % 2 == 0) {
      Vector shift = RandomMatrix(&r, feat, 1, 1.0).col(0);
      Vector scale = (RandomMatrix(&r, feat, 1, 1.0).array().abs() + 0.5).matrix().col(0);
      net.SetInputNormalization(shift, scale);
    }
    FeatureMatrix f;
    f.values = RandomMatrix(&r, 7, feat, 1.0);
    const PosteriorMatrix teacher = RandomPosteriors(&r, 7, classes);
    grad_err = std::max(grad_err,
                        GradCheck(net, SoftCe(teacher), f, ContextWindow{k}, 1e-5));
  }
  c.Expect(grad_err <= 1e-5, "gradient check over 24 instances, max relative error " +
                                 Fmt(grad_err, "%.3g"));
  c.seconds = timer.Seconds();
  return c;
}

// ---------------------------------------------------------------------------

bool SameBytes(const fs::path &a, const fs::path &b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

std::string Slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Criterion RunA6(const SuiteConfig &cfg, const fs::path &first,
                const fs::path &second, double first_seconds) {
  Timer timer;
  Criterion c{"A6", "determinism and formats"};
  RunNoisySeed(cfg, 1, second.string(), false);

  static const std::set<std::string> kCompared = {".net", ".tsv", ".feat",
                                                  ".wav", ".lab"};
  size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const auto &entry : fs::recursive_directory_iterator(second)) {
    if (!entry.is_regular_file()) continue;
    if (kCompared.count(entry.path().extension().string()) == 0) continue;
    const fs::path rel = fs::relative(entry.path(), second);
    ++compared;
    if (!SameBytes(entry.path(), first / rel)) mismatched.push_back(rel.string());
  }
  std::string detail = std::to_string(compared) +
                       " checkpoints, manifests, feature, audio and label files";
  if (!mismatched.empty()) detail += "; first mismatch " + mismatched.front();
  c.Expect(compared > 0 && mismatched.empty(),
           "pipeline rerun is byte-identical: " + detail);

  const fs::path teacher = first / "models/teacher.net";
  c.Expect(EncodeNetwork(ReadNetwork(teacher.string())) == Slurp(teacher),
           "checkpoint decode/encode round trip is lossless");
  const fs::path manifest = first / "clean/train/manifest.tsv";
  const ParallelManifest m = ReadManifest(manifest.string());
  const fs::path copy = first / "clean/train/manifest-roundtrip.tsv";
  WriteManifest(copy.string(), m);
  c.Expect(SameBytes(manifest, copy), "manifest read/write round trip is lossless");
  const fs::path feat = m.pairs.front().target.feature_path;
  c.Expect(EncodeFeatures(ReadFeatures(feat.string())) == Slurp(feat),
           "feature file decode/encode round trip is lossless");
  const double total = first_seconds + timer.Seconds();
  c.Note("first seed " + Fmt(first_seconds, "%.0f") + " s, rerun " +
         Fmt(timer.Seconds(), "%.0f") + " s");
  c.seconds = total;
  return c;
}

int Main(int argc, char **argv) {
  CLI::App app{"tsadapt acceptance run"};
  std::string out = (fs::temp_directory_path() / "tsadapt-acceptance").string();
  int seeds = 3;
  int jobs = 1;
  bool keep = false;
  bool verbose = false;
  std::string report;
  app.add_option("--out", out, "Work directory (wiped first)");
  app.add_option("--seeds", seeds, "Seeds for the trend criteria")
      ->check(CLI::Range(1, 20));
  app.add_option("--jobs", jobs, "Worker threads per seed")->check(CLI::Range(1, 64));
  app.add_flag("--keep", keep, "Keep the work directory");
  app.add_option("--report", report, "Also write the verdicts to this file");
  app.add_flag("-v,--verbose", verbose, "Print stage progress to stderr");
  CLI11_PARSE(app, argc, argv);

  const SuiteConfig cfg;
  const ProgressFn progress = [verbose](const std::string &line) {
    if (verbose) std::cerr << line << "\n";
  };
  if (!report.empty()) {
    g_report.open(report);
    if (!g_report) throw Error("cannot open report file " + report);
  }
  fs::remove_all(out);
  fs::create_directories(out);
  std::vector<Criterion> done;

  done.push_back(RunA0());
  Print(done.back());

  std::vector<SeedReport> noisy;
  double noisy_seconds = 0.0, seed1_seconds = 0.0;
  for (int s = 1; s <= seeds; ++s) {
    Timer t;
    noisy.push_back(RunNoisySeed(cfg, s, out + "/noisy/seed" + std::to_string(s),
                                 true, jobs, progress));
    if (s == 1) seed1_seconds = t.Seconds();
    noisy_seconds += t.Seconds();
  }
  const std::vector<TrendCheck> noisy_checks = CheckNoisyTrends(noisy);

  Criterion a1{"A1", "noisy-domain adaptation trend"};
  TrendLines(noisy_checks,
             {"A1.teacher", "A1.student-vs-multicond", "A1.scaled-vs-1x",
              "A1.scaled-near-teacher", "A1.gap-ratio"},
             &a1);
  a1.Note(std::to_string(seeds) + " seed(s), " + Fmt(noisy_seconds / seeds, "%.0f") +
          " s per seed including baselines");
  a1.seconds = noisy_seconds;
  done.push_back(a1);
  Print(done.back());

  Criterion a2{"A2", "SNR bucket breakdown"};
  TrendLines(noisy_checks, {"A2.buckets"}, &a2);
  std::istringstream table(SeedBucketTable(noisy, "teacher", "ts4x", "mixed"));
  for (std::string line; std::getline(table, line);)
    if (!line.empty()) a2.Note(line);
  done.push_back(a2);
  Print(done.back());

  Criterion a3{"A3", "unseen noise type"};
  TrendLines(CheckMismatchTrends(noisy), {"A3.unseen-noise"}, &a3);
  done.push_back(a3);
  Print(done.back());

  Timer children_timer;
  std::vector<SeedReport> children;
  for (int s = 1; s <= seeds; ++s) {
    const std::string seed_dir = out + "/noisy/seed" + std::to_string(s);
    const Network teacher = ReadNetwork(seed_dir + "/models/teacher.net");
    children.push_back(RunChildrenSeed(cfg, s,
                                       out + "/children/seed" + std::to_string(s),
                                       &teacher, jobs, progress));
  }
  Criterion a4{"A4", "warped-domain adaptation"};
  TrendLines(CheckChildrenTrends(children),
             {"A4.warp-gap", "A4.recovery", "A4.filter"}, &a4);
  a4.seconds = children_timer.Seconds();
  done.push_back(a4);
  Print(done.back());

  Criterion a5{"A5", "baseline orderings"};
  TrendLines(noisy_checks, {"A5.pseudo", "A5.endpoints"}, &a5);
  done.push_back(a5);
  Print(done.back());

  done.push_back(RunA6(cfg, out + "/noisy/seed1", out + "/rerun/seed1",
                       seed1_seconds));
  Print(done.back());

  int failed = 0;
  for (const Criterion &c : done) failed += c.pass ? 0 : 1;
  Emit("acceptance: " + std::to_string(done.size()) + " criteria evaluated, " +
       std::to_string(done.size() - failed) + " passed, " +
       std::to_string(failed) + " failed\n");
  if (!keep) fs::remove_all(out);
  return failed == 0 ? 0 : 3;
}

}  // namespace
}  // namespace tsadapt

int main(int argc, char **argv) {
  try {
    return tsadapt::Main(argc, argv);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
