// core/src/experiments.cc

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

#include "tsadapt/experiments.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <utility>

#include <nlohmann/json.hpp>

#include "tsadapt/corpus.h"

namespace tsadapt {

namespace fs = std::filesystem;

namespace {

// Seed streams; the clean corpora use the same streams in every scenario so
// a teacher trained for one scenario is valid for the other.
enum SeedStream : uint64_t {
  kTrainCorpus = 1,
  kTestCorpus = 2,
  kNoise = 3,
  kHeldoutNoise = 4,
  kNoisyPairs = 5,
  kNoisyTest = 6,
  kHeldoutTest = 7,
  kMixedTest = 8,
  kScale = 9,
  kTeacherInit = 10,
  kMultiCondInit = 11,
  kEndpointSubset = 12,
  kClassifierCorpus = 20,
  kClassifierInit = 21,
  kDomainAssignment = 22,
  kTeacherTrain = 30,
  kMultiCondTrain = 31,
  kAdaptTrain = 32,
  kScaledTrain = 33,
  kPseudoTrain = 34,
  kEndpointTrain = 35,
  kClassifierTrain = 36,
  kFilteredTrain = 37,
};

const std::vector<NoiseKind> kTrainNoises = {NoiseKind::kWhite,
                                             NoiseKind::kBrown};
const std::vector<NoiseKind> kHeldoutNoises = {NoiseKind::kModulatedBand};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       since)
      .count();
}

class StageRunner {
 public:
  StageRunner(uint64_t seed, const ProgressFn &progress)
      : seed_(seed), progress_(progress) {}

  template <typename F>
  auto operator()(const std::string &name, F &&fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        Report(name, start);
      } else {
        auto result = fn();
        Report(name, start);
        return result;
      }
    } catch (const std::exception &e) {
      throw Error(Msg() << "seed " << seed_ << ", stage " << name << ": "
                        << e.what());
    }
  }

 private:
  void Report(const std::string &name,
              std::chrono::steady_clock::time_point start) const {
    if (!progress_) return;
    char buf[64];
    std::snprintf(buf, sizeof(buf), " (%.1f s)", Seconds(start));
    progress_("seed " + std::to_string(seed_) + ": " + name + buf);
  }

  uint64_t seed_;
  const ProgressFn &progress_;
};

std::vector<int> NetworkDims(const SuiteConfig &cfg, int outputs) {
  std::vector<int> dims = {cfg.feat.n_mels * (2 * cfg.context + 1)};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(outputs);
  return dims;
}

std::vector<const Matrix *> FeaturePointers(
    const std::vector<LabeledFeatures> &data) {
  std::vector<const Matrix *> out;
  out.reserve(data.size());
  for (const LabeledFeatures &u : data) out.push_back(&u.features.values);
  return out;
}

std::vector<const Matrix *> TargetPointers(const ParallelData &data) {
  std::vector<const Matrix *> out;
  out.reserve(data.size());
  for (const FeaturePair &p : data) out.push_back(&p.target.values);
  return out;
}

TsConfig Seeded(TsConfig cfg, uint64_t seed, uint64_t stream) {
  cfg.seed = DeriveSeed(seed, stream);
  return cfg;
}

void SaveModel(const std::string &dir, const std::string &id,
               const TrainResult &result) {
  fs::create_directories(dir);
  WriteNetwork(dir + "/" + id + ".net", result.net);
  WriteLossReport(dir + "/" + id + ".loss", result.report);
}

ParallelManifest SaveManifest(ParallelManifest manifest,
                              const std::string &dir) {
  WriteManifest(dir + "/manifest.tsv", manifest);
  return manifest;
}

struct CleanData {
  std::vector<UtteranceRecord> train_records;
  std::vector<UtteranceRecord> test_records;
  std::vector<LabeledFeatures> train;
  std::vector<LabeledFeatures> test;
};

CleanData MakeCleanData(const SuiteConfig &cfg, uint64_t seed,
                        const std::string &dir, int jobs, StageRunner &stage) {
  CleanData d;
  stage("synthesise clean corpora", [&] {
    d.train_records =
        SynthCorpus(cfg.spec, cfg.train_utterances,
                    DeriveSeed(seed, kTrainCorpus), dir + "/clean/train",
                    cfg.feat, jobs, "train");
    d.test_records =
        SynthCorpus(cfg.spec, cfg.test_utterances,
                    DeriveSeed(seed, kTestCorpus), dir + "/clean/test",
                    cfg.feat, jobs, "test");
    SaveManifest(CorpusManifest(d.train_records), dir + "/clean/train");
    SaveManifest(CorpusManifest(d.test_records), dir + "/clean/test");
    d.train = LoadUtterances(d.train_records, jobs);
    d.test = LoadUtterances(d.test_records, jobs);
  });
  return d;
}

Network TrainTeacher(const SuiteConfig &cfg, uint64_t seed,
                     const CleanData &data, const std::string &dir,
                     StageRunner &stage) {
  return stage("train teacher", [&] {
    Network init = InitNetwork(NetworkDims(cfg, cfg.spec.num_classes),
                               cfg.activation, DeriveSeed(seed, kTeacherInit),
                               {cfg.context});
    FitInputNormalization(FeaturePointers(data.train), &init);
    TrainResult r = TrainHard(init, data.train,
                              Seeded(cfg.teacher_train, seed, kTeacherTrain));
    SaveModel(dir + "/models", "teacher", r);
    return r.net;
  });
}

EvalResult Evaluate(const Network &net, const std::string &model,
                    const std::string &teacher_data,
                    const std::string &student_data,
                    const std::string &corpus,
                    const std::vector<LabeledFeatures> &data, int jobs,
                    const std::vector<double> *snrs = nullptr) {
  const std::vector<UtteranceScore> scores =
      ScoreUtterances(net, data, snrs ? *snrs : std::vector<double>{}, jobs);
  EvalResult r;
  r.model_id = model;
  r.corpus_id = corpus;
  r.teacher_data = teacher_data;
  r.student_data = student_data;
  r.fer = CorpusErrorRate(scores);
  for (const UtteranceScore &s : scores) r.frames += s.frames;
  if (snrs != nullptr) r.buckets = BucketBreakdown(scores);
  return r;
}

void WriteResults(const std::string &path,
                  const std::vector<EvalResult> &results) {
  std::ofstream out(path, std::ios::binary);
  TSADAPT_CHECK(out, "cannot write '" << path << "'");
  out << EmitResults(results);
  TSADAPT_CHECK(out.good(), "write failed for '" << path << "'");
}

std::string Fmt(double x, const char *format = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, x);
  return buf;
}

std::vector<EvalResult> OnCorpora(const std::vector<EvalResult> &results,
                                  const std::vector<std::string> &corpora) {
  std::vector<EvalResult> out;
  for (const EvalResult &r : results)
    if (std::find(corpora.begin(), corpora.end(), r.corpus_id) !=
        corpora.end())
      out.push_back(r);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration.

SynthSpec SuiteSynthSpec() {
  SynthSpec spec;
  spec.duration_s = 0.35;
  spec.edge_silence_s = 0.05;
  return spec;
}

TsConfig SuiteConfig::DefaultTeacherConfig() {
  TsConfig cfg;
  cfg.max_epochs = 6;
  cfg.learning_rate = 0.05;
  return cfg;
}

TsConfig SuiteConfig::DefaultAdaptConfig() {
  TsConfig cfg;
  cfg.max_epochs = 6;
  cfg.learning_rate = 0.01;
  return cfg;
}

void SuiteConfig::Validate() const {
  spec.Validate();
  feat.Validate();
  teacher_train.Validate();
  adapt.Validate();
  TSADAPT_CHECK(train_utterances >= 2 && test_utterances >= 1,
                "need at least 2 training and 1 test utterance");
  TSADAPT_CHECK(context >= 0, "context must be non-negative");
  for (int h : hidden) TSADAPT_CHECK(h >= 1, "hidden sizes must be positive");
  TSADAPT_CHECK(scale_factor >= 1, "scale_factor must be at least 1");
  TSADAPT_CHECK(scaled_epochs >= 1, "scaled_epochs must be at least 1");
  TSADAPT_CHECK(snr_lo <= snr_hi && mixed_snr_lo <= mixed_snr_hi,
                "SNR ranges must satisfy lo <= hi");
  TSADAPT_CHECK(noise_duration_s > spec.duration_s,
                "noise recordings must outlast an utterance");
  TSADAPT_CHECK(std::abs(warp_alpha) < 1.0, "|warp_alpha| must be below 1");
  TSADAPT_CHECK(child_share > 0.0 && child_share < 1.0,
                "child_share must be in (0, 1)");
  TSADAPT_CHECK(classifier_utterances >= 2,
                "classifier_utterances must be at least 2");
  TSADAPT_CHECK(filter_threshold >= 0.0 && filter_threshold <= 1.0,
                "filter_threshold must be in [0, 1]");
  TSADAPT_CHECK(endpoint_pairs >= 2 && endpoint_epochs >= 1,
                "endpoint runs need at least 2 pairs and 1 epoch");
}

std::string SuiteConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["spec"] = nlohmann::ordered_json::parse(spec.ToJson());
  j["feat"] = {{"frame_len", feat.frame_len},
               {"hop", feat.hop},
               {"fft_size", feat.fft_size},
               {"n_mels", feat.n_mels},
               {"log_floor", feat.log_floor}};
  j["train_utterances"] = train_utterances;
  j["test_utterances"] = test_utterances;
  j["context"] = context;
  j["hidden"] = hidden;
  j["activation"] = ActivationName(activation);
  j["teacher_train"] = nlohmann::ordered_json::parse(teacher_train.ToJson());
  j["adapt"] = nlohmann::ordered_json::parse(adapt.ToJson());
  j["scale_factor"] = scale_factor;
  j["scaled_epochs"] = scaled_epochs;
  j["snr_lo"] = snr_lo;
  j["snr_hi"] = snr_hi;
  j["mixed_snr_lo"] = mixed_snr_lo;
  j["mixed_snr_hi"] = mixed_snr_hi;
  j["noise_duration_s"] = noise_duration_s;
  j["warp_alpha"] = warp_alpha;
  j["child_share"] = child_share;
  j["classifier_utterances"] = classifier_utterances;
  j["filter_threshold"] = filter_threshold;
  j["endpoint_pairs"] = endpoint_pairs;
  j["endpoint_epochs"] = endpoint_epochs;
  return j.dump(2);
}

SuiteConfig SuiteConfig::FromJson(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(Msg() << "suite config is not valid JSON: " << e.what());
  }
  TSADAPT_CHECK(j.is_object(), "suite config must be a JSON object");
  SuiteConfig cfg;
  for (const auto &[key, value] : j.items()) {
    try {
      if (key == "spec") {
        cfg.spec = SynthSpec::FromJson(value.dump());
      } else if (key == "feat") {
        for (const auto &[k, v] : value.items()) {
          if (k == "frame_len") v.get_to(cfg.feat.frame_len);
          else if (k == "hop") v.get_to(cfg.feat.hop);
          else if (k == "fft_size") v.get_to(cfg.feat.fft_size);
          else if (k == "n_mels") v.get_to(cfg.feat.n_mels);
          else if (k == "log_floor") v.get_to(cfg.feat.log_floor);
          else throw Error(Msg() << "suite config has unknown field 'feat." << k << "'");
        }
      } else if (key == "train_utterances") value.get_to(cfg.train_utterances);
      else if (key == "test_utterances") value.get_to(cfg.test_utterances);
      else if (key == "context") value.get_to(cfg.context);
      else if (key == "hidden") value.get_to(cfg.hidden);
      else if (key == "activation") cfg.activation = ParseActivation(value.get<std::string>());
      else if (key == "teacher_train") cfg.teacher_train = TsConfig::FromJson(value.dump());
      else if (key == "adapt") cfg.adapt = TsConfig::FromJson(value.dump());
      else if (key == "scale_factor") value.get_to(cfg.scale_factor);
      else if (key == "scaled_epochs") value.get_to(cfg.scaled_epochs);
      else if (key == "snr_lo") value.get_to(cfg.snr_lo);
      else if (key == "snr_hi") value.get_to(cfg.snr_hi);
      else if (key == "mixed_snr_lo") value.get_to(cfg.mixed_snr_lo);
      else if (key == "mixed_snr_hi") value.get_to(cfg.mixed_snr_hi);
      else if (key == "noise_duration_s") value.get_to(cfg.noise_duration_s);
      else if (key == "warp_alpha") value.get_to(cfg.warp_alpha);
      else if (key == "child_share") value.get_to(cfg.child_share);
      else if (key == "classifier_utterances") value.get_to(cfg.classifier_utterances);
      else if (key == "filter_threshold") value.get_to(cfg.filter_threshold);
      else if (key == "endpoint_pairs") value.get_to(cfg.endpoint_pairs);
      else if (key == "endpoint_epochs") value.get_to(cfg.endpoint_epochs);
      else throw Error(Msg() << "suite config has unknown field '" << key << "'");
    } catch (const nlohmann::json::exception &e) {
      throw Error(Msg() << "suite config field '" << key
                        << "' has the wrong type: " << e.what());
    }
  }
  cfg.Validate();
  return cfg;
}

Scenario ParseScenario(const std::string &name) {
  if (name == "noisy") return Scenario::kNoisy;
  if (name == "mismatch") return Scenario::kMismatch;
  if (name == "children") return Scenario::kChildren;
  throw Error(Msg() << "unknown scenario '" << name
                    << "' (expected noisy, mismatch or children)");
}

std::string ScenarioName(Scenario scenario) {
  switch (scenario) {
    case Scenario::kNoisy: return "noisy";
    case Scenario::kMismatch: return "mismatch";
    case Scenario::kChildren: return "children";
  }
  return "?";
}

const EvalResult &FindResult(const std::vector<EvalResult> &results,
                             const std::string &model,
                             const std::string &corpus) {
  for (const EvalResult &r : results)
    if (r.model_id == model && r.corpus_id == corpus) return r;
  throw Error(Msg() << "no result for model '" << model << "' on corpus '"
                    << corpus << "'");
}

double FindFer(const std::vector<EvalResult> &results,
               const std::string &model, const std::string &corpus) {
  return FindResult(results, model, corpus).fer;
}

// ---------------------------------------------------------------------------
// Noisy-domain pipeline.

SeedReport RunNoisySeed(const SuiteConfig &cfg, uint64_t seed,
                        const std::string &dir, bool baselines, int jobs,
                        const ProgressFn &progress) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  StageRunner stage(seed, progress);
  SeedReport report;
  report.seed = seed;
  fs::create_directories(dir);

  const CleanData clean = MakeCleanData(cfg, seed, dir, jobs, stage);
  std::vector<NoiseSource> noises, heldout_noises;
  stage("synthesise noise", [&] {
    noises = SynthNoiseSet(kTrainNoises, cfg.noise_duration_s,
                           cfg.spec.sample_rate, DeriveSeed(seed, kNoise),
                           dir + "/noise");
    heldout_noises =
        SynthNoiseSet(kHeldoutNoises, cfg.noise_duration_s,
                      cfg.spec.sample_rate, DeriveSeed(seed, kHeldoutNoise),
                      dir + "/noise-heldout");
  });

  ParallelManifest noisy1x, noisy4x, noisy_test, heldout_test, mixed_test;
  stage("build parallel corpora", [&] {
    noisy1x = SaveManifest(
        BuildNoisyParallel(clean.train_records, noises, cfg.snr_lo, cfg.snr_hi,
                           DeriveSeed(seed, kNoisyPairs),
                           dir + "/pairs/noisy1x", cfg.feat, jobs),
        dir + "/pairs/noisy1x");
    noisy_test = SaveManifest(
        BuildNoisyParallel(clean.test_records, noises, cfg.snr_lo, cfg.snr_hi,
                           DeriveSeed(seed, kNoisyTest),
                           dir + "/pairs/noisy-test", cfg.feat, jobs),
        dir + "/pairs/noisy-test");
    heldout_test = SaveManifest(
        BuildNoisyParallel(clean.test_records, heldout_noises, cfg.snr_lo,
                           cfg.snr_hi, DeriveSeed(seed, kHeldoutTest),
                           dir + "/pairs/heldout-test", cfg.feat, jobs),
        dir + "/pairs/heldout-test");
    mixed_test = SaveManifest(
        BuildNoisyParallel(clean.test_records, noises, cfg.mixed_snr_lo,
                           cfg.mixed_snr_hi, DeriveSeed(seed, kMixedTest),
                           dir + "/pairs/mixed-test", cfg.feat, jobs),
        dir + "/pairs/mixed-test");
  });
  stage("scale parallel corpus", [&] {
    noisy4x = SaveManifest(
        ScaleCorpus(noisy1x, cfg.scale_factor, DeriveSeed(seed, kScale),
                    dir + "/pairs/noisy" + std::to_string(cfg.scale_factor) +
                        "x",
                    jobs),
        dir + "/pairs/noisy" + std::to_string(cfg.scale_factor) + "x");
  });

  const ParallelData pairs1x = LoadParallelData(noisy1x, jobs);
  const ParallelData test_pairs = LoadParallelData(noisy_test, jobs);
  const std::vector<LabeledFeatures> noisy_eval = TargetSide(test_pairs);
  const std::vector<LabeledFeatures> heldout_eval =
      TargetSide(LoadParallelData(heldout_test, jobs));
  const std::vector<LabeledFeatures> mixed_eval =
      TargetSide(LoadParallelData(mixed_test, jobs));
  std::vector<double> mixed_snrs(mixed_test.size());
  stage("estimate SNRs", [&] {
    ParallelFor(mixed_test.size(), jobs, [&](size_t i) {
      const Waveform wave = ReadWav(mixed_test.pairs[i].target.wave_path);
      mixed_snrs[i] = EstimateSnr(wave, cfg.feat.frame_len, cfg.feat.hop);
    });
  });

  const std::string models = dir + "/models";
  const Network teacher = TrainTeacher(cfg, seed, clean, dir, stage);
  const std::vector<LabeledFeatures> noisy_train = TargetSide(pairs1x);
  const Network multicond = stage("train multi-condition model", [&] {
    Network init = InitNetwork(NetworkDims(cfg, cfg.spec.num_classes),
                               cfg.activation,
                               DeriveSeed(seed, kMultiCondInit), {cfg.context});
    FitInputNormalization(FeaturePointers(noisy_train), &init);
    TrainResult r = TrainHard(init, noisy_train,
                              Seeded(cfg.teacher_train, seed, kMultiCondTrain));
    SaveModel(models, "multicond", r);
    return r.net;
  });
  const Network student_init = CloneForTarget(teacher, TargetPointers(pairs1x));
  const Network ts1 = stage("adapt student (1x)", [&] {
    TrainResult r = TsAdapt(teacher, pairs1x,
                            Seeded(cfg.adapt, seed, kAdaptTrain),
                            &student_init);
    SaveModel(models, "ts1x", r);
    return r.net;
  });
  const Network ts4 = stage("adapt student (scaled)", [&] {
    const ParallelData pairs4x = LoadParallelData(noisy4x, jobs);
    const Network init = CloneForTarget(teacher, TargetPointers(pairs4x));
    TsConfig c = Seeded(cfg.adapt, seed, kScaledTrain);
    c.max_epochs = cfg.scaled_epochs;
    TrainResult r = TsAdapt(teacher, pairs4x, c, &init);
    SaveModel(models, "ts4x", r);
    return r.net;
  });

  const std::string scaled = "clean-noisy " + std::to_string(cfg.scale_factor) + "x";
  struct Entry {
    const Network *net;
    std::string id, teacher_data, student_data;
  };
  std::vector<Entry> entries = {
      {&teacher, "teacher", "clean", "-"},
      {&multicond, "multicond", "noisy", "-"},
      {&ts1, "ts1x", "clean", "clean-noisy 1x"},
      {&ts4, "ts4x", "clean", scaled},
  };

  std::optional<Network> pseudo;
  if (baselines) {
    pseudo = stage("adapt pseudo-label baseline", [&] {
      std::vector<FeatureMatrix> targets;
      targets.reserve(pairs1x.size());
      for (const FeaturePair &p : pairs1x) targets.push_back(p.target);
      TrainResult r = PseudoLabelAdapt(teacher, targets,
                                       Seeded(cfg.adapt, seed, kPseudoTrain),
                                       &student_init);
      SaveModel(models, "pseudo", r);
      return r.net;
    });
    entries.push_back({&*pseudo, "pseudo", "clean", "noisy pseudo-labels"});

    stage("interpolation endpoints", [&] {
      std::vector<size_t> order(pairs1x.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(DeriveSeed(seed, kEndpointSubset));
      Shuffle(&order, &rng);
      order.resize(std::min<size_t>(order.size(), cfg.endpoint_pairs));
      std::sort(order.begin(), order.end());
      ParallelData subset;
      for (size_t i : order) subset.push_back(pairs1x[i]);
      TsConfig c = Seeded(cfg.adapt, seed, kEndpointTrain);
      c.max_epochs = cfg.endpoint_epochs;
      const auto final_obj = [](const TrainResult &r) {
        return r.report.Final().validation_objective;
      };
      const double interp1 = final_obj(InterpolatedDistill(teacher, subset, 1.0, c));
      const double ts = final_obj(TsAdapt(teacher, subset, c));
      const double interp0 = final_obj(InterpolatedDistill(teacher, subset, 0.0, c));
      const double hard = final_obj(TrainHard(teacher, TargetSide(subset), c));
      report.metrics["endpoint.lambda1"] = interp1;
      report.metrics["endpoint.ts"] = ts;
      report.metrics["endpoint.lambda0"] = interp0;
      report.metrics["endpoint.hard"] = hard;
    });
  }

  stage("evaluate", [&] {
    for (const Entry &e : entries) {
      report.results.push_back(Evaluate(*e.net, e.id, e.teacher_data,
                                        e.student_data, "clean", clean.test,
                                        jobs));
      EvalResult noisy = Evaluate(*e.net, e.id, e.teacher_data,
                                  e.student_data, "noisy", noisy_eval, jobs);
      noisy.mean_kl = BehavioralGap(teacher, *e.net, test_pairs, jobs);
      report.results.push_back(noisy);
      report.results.push_back(Evaluate(*e.net, e.id, e.teacher_data,
                                        e.student_data, "heldout",
                                        heldout_eval, jobs));
      report.results.push_back(Evaluate(*e.net, e.id, e.teacher_data,
                                        e.student_data, "mixed", mixed_eval,
                                        jobs, &mixed_snrs));
    }
    // The unadapted clone is the teacher itself applied to target inputs.
    report.metrics["gap.clone"] =
        *FindResult(report.results, "teacher", "noisy").mean_kl;
    report.metrics["gap.ts1x"] =
        *FindResult(report.results, "ts1x", "noisy").mean_kl;
    report.metrics["gap.ts4x"] =
        *FindResult(report.results, "ts4x", "noisy").mean_kl;
    WriteResults(dir + "/results.jsonl", report.results);
  });
  report.wall_seconds = Seconds(start);
  return report;
}

// ---------------------------------------------------------------------------
// Warped-domain pipeline.

SeedReport RunChildrenSeed(const SuiteConfig &cfg, uint64_t seed,
                           const std::string &dir, const Network *teacher_in,
                           int jobs, const ProgressFn &progress) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  StageRunner stage(seed, progress);
  SeedReport report;
  report.seed = seed;
  fs::create_directories(dir);

  const CleanData clean = MakeCleanData(cfg, seed, dir, jobs, stage);
  const Network teacher = teacher_in != nullptr
                              ? *teacher_in
                              : TrainTeacher(cfg, seed, clean, dir, stage);

  ParallelManifest warped_train, warped_test, two_domain, filtered;
  stage("build warped corpora", [&] {
    warped_train = SaveManifest(
        BuildWarpedParallel(clean.train_records, cfg.warp_alpha, seed,
                            dir + "/pairs/warped", cfg.feat, jobs),
        dir + "/pairs/warped");
    warped_test = SaveManifest(
        BuildWarpedParallel(clean.test_records, cfg.warp_alpha, seed,
                            dir + "/pairs/warped-test", cfg.feat, jobs),
        dir + "/pairs/warped-test");
  });

  // A pool where only some utterances were transformed: the rest pair the
  // adult recording with itself.  The domain classifier has to find the
  // transformed ones.
  int true_children = 0;
  stage("build two-domain pool", [&] {
    Rng rng(DeriveSeed(seed, kDomainAssignment));
    two_domain.metadata = {{"mode", "two-domain"},
                           {"child_share", Fmt(cfg.child_share, "%.17g")}};
    for (size_t i = 0; i < warped_train.size(); ++i) {
      if (rng.Uniform() < cfg.child_share) {
        two_domain.pairs.push_back(warped_train.pairs[i]);
        ++true_children;
      } else {
        ManifestPair p = warped_train.pairs[i];
        p.target = p.source;
        two_domain.pairs.push_back(p);
      }
    }
    fs::create_directories(dir + "/pairs/two-domain");
    WriteManifest(dir + "/pairs/two-domain/manifest.tsv", two_domain);
  });
  report.metrics["filter.true_fraction"] =
      static_cast<double>(true_children) / two_domain.size();

  const Network classifier = stage("train domain classifier", [&] {
    const uint64_t corpus_seed = DeriveSeed(seed, kClassifierCorpus);
    const auto records =
        SynthCorpus(cfg.spec, cfg.classifier_utterances, corpus_seed,
                    dir + "/classifier/adult", cfg.feat, jobs, "clf");
    const ParallelData pairs = LoadParallelData(
        BuildWarpedParallel(records, cfg.warp_alpha, corpus_seed,
                            dir + "/classifier/child", cfg.feat, jobs),
        jobs);
    std::vector<LabeledFeatures> data;
    for (const FeaturePair &p : pairs) {
      const int frames = p.source.NumFrames();
      data.push_back({p.id + "/adult", p.source, std::vector<int32_t>(frames, 0)});
      data.push_back({p.id + "/child", p.target, std::vector<int32_t>(frames, 1)});
    }
    Network init = InitNetwork(NetworkDims(cfg, 2), cfg.activation,
                               DeriveSeed(seed, kClassifierInit),
                               {cfg.context});
    FitInputNormalization(FeaturePointers(data), &init);
    TrainResult r = TrainHard(init, data,
                              Seeded(cfg.teacher_train, seed, kClassifierTrain));
    SaveModel(dir + "/models", "domain-classifier", r);
    return r.net;
  });

  stage("score domain classifier", [&] {
    // Held-out test pairs; silence frames carry no domain information, so
    // accuracy is reported on speech frames and on all frames.
    const ParallelData pairs = LoadParallelData(warped_test, jobs);
    int64_t speech = 0, speech_ok = 0, all = 0, all_ok = 0;
    for (const FeaturePair &p : pairs) {
      for (int domain = 0; domain < 2; ++domain) {
        const std::vector<int32_t> decided =
            Forward(classifier, domain == 0 ? p.source : p.target).Argmax();
        for (size_t f = 0; f < decided.size(); ++f) {
          const bool ok = decided[f] == domain;
          ++all;
          all_ok += ok;
          if (cfg.spec.HasSilenceClass() && p.target_labels[f] == 0) continue;
          ++speech;
          speech_ok += ok;
        }
      }
    }
    report.metrics["classifier.accuracy"] =
        speech > 0 ? 100.0 * speech_ok / speech : 0.0;
    report.metrics["classifier.accuracy_all"] = 100.0 * all_ok / all;
  });

  stage("filter two-domain pool", [&] {
    filtered = FilterByDomainClassifier(two_domain, classifier, 1,
                                        cfg.filter_threshold,
                                        ManifestSide::kTarget);
    fs::create_directories(dir + "/pairs/filtered");
    WriteManifest(dir + "/pairs/filtered/manifest.tsv", filtered);
    int correct = 0;
    for (const ManifestPair &p : filtered.pairs)
      if (p.target.id != p.source.id) ++correct;
    report.metrics["filter.retained_fraction"] =
        static_cast<double>(filtered.size()) / two_domain.size();
    report.metrics["filter.precision"] =
        filtered.size() == 0 ? 0.0
                             : static_cast<double>(correct) / filtered.size();
  });

  const std::string models = dir + "/models";
  const Network warped_student = stage("adapt student (all warped)", [&] {
    const ParallelData pairs = LoadParallelData(warped_train, jobs);
    const Network init = CloneForTarget(teacher, TargetPointers(pairs));
    TrainResult r =
        TsAdapt(teacher, pairs, Seeded(cfg.adapt, seed, kAdaptTrain), &init);
    SaveModel(models, "ts-warped", r);
    return r.net;
  });
  std::optional<Network> filtered_student;
  if (filtered.size() >= 2) {
    filtered_student = stage("adapt student (filtered)", [&] {
      const ParallelData pairs = LoadParallelData(filtered, jobs);
      const Network init = CloneForTarget(teacher, TargetPointers(pairs));
      TrainResult r = TsAdapt(teacher, pairs,
                              Seeded(cfg.adapt, seed, kFilteredTrain), &init);
      SaveModel(models, "ts-filtered", r);
      return r.net;
    });
  }

  stage("evaluate", [&] {
    const ParallelData test_pairs = LoadParallelData(warped_test, jobs);
    const std::vector<LabeledFeatures> child = TargetSide(test_pairs);
    const auto add = [&](const Network &net, const std::string &id,
                         const std::string &student_data) {
      report.results.push_back(Evaluate(net, id, "adult", student_data,
                                        "adult", clean.test, jobs));
      EvalResult r =
          Evaluate(net, id, "adult", student_data, "child", child, jobs);
      r.mean_kl = BehavioralGap(teacher, net, test_pairs, jobs);
      report.results.push_back(r);
    };
    add(teacher, "teacher", "-");
    if (filtered_student) add(*filtered_student, "ts-filtered", "adult-child filtered");
    add(warped_student, "ts-warped", "adult-child all");
    WriteResults(dir + "/results.jsonl", report.results);
  });
  report.wall_seconds = Seconds(start);
  return report;
}

// ---------------------------------------------------------------------------
// Aggregation.

std::vector<EvalResult> AverageResults(const std::vector<SeedReport> &reports) {
  TSADAPT_CHECK(!reports.empty(), "no seed reports to average");
  std::vector<EvalResult> out;
  for (const EvalResult &first : reports[0].results) {
    EvalResult avg = first;
    avg.fer = 0.0;
    avg.frames = 0;
    double kl = 0.0;
    int kl_count = 0;
    for (const SeedReport &rep : reports) {
      const EvalResult &r = FindResult(rep.results, first.model_id, first.corpus_id);
      avg.fer += r.fer / reports.size();
      avg.frames += r.frames;
      if (r.mean_kl) {
        kl += *r.mean_kl;
        ++kl_count;
      }
      if (r.buckets && avg.buckets && &rep != &reports[0]) {
        for (int b = 0; b < kNumSnrBuckets; ++b) {
          avg.buckets->buckets[b].frames += r.buckets->buckets[b].frames;
          avg.buckets->buckets[b].errors += r.buckets->buckets[b].errors;
          avg.buckets->buckets[b].utterances += r.buckets->buckets[b].utterances;
        }
        avg.buckets->sentinel.frames += r.buckets->sentinel.frames;
        avg.buckets->sentinel.errors += r.buckets->sentinel.errors;
        avg.buckets->sentinel.utterances += r.buckets->sentinel.utterances;
      }
    }
    avg.frames /= static_cast<int64_t>(reports.size());
    if (kl_count > 0) avg.mean_kl = kl / kl_count;
    if (avg.buckets) {
      int64_t frames = 0, errors = 0;
      for (const BucketStats &b : avg.buckets->buckets) {
        frames += b.frames;
        errors += b.errors;
      }
      avg.buckets->bucket_average = frames > 0 ? 100.0 * errors / frames : 0.0;
      avg.buckets->overall_error = avg.fer;
    }
    out.push_back(avg);
  }
  return out;
}

double MeanMetric(const std::vector<SeedReport> &reports,
                  const std::string &name) {
  TSADAPT_CHECK(!reports.empty(), "no seed reports");
  double sum = 0.0;
  for (const SeedReport &r : reports) {
    const auto it = r.metrics.find(name);
    TSADAPT_CHECK(it != r.metrics.end(),
                  "seed " << r.seed << " has no metric '" << name << "'");
    sum += it->second;
  }
  return sum / reports.size();
}

std::optional<double> MeanBucketError(const std::vector<SeedReport> &reports,
                                      const std::string &model,
                                      const std::string &corpus, int bucket) {
  TSADAPT_CHECK(bucket >= 0 && bucket < kNumSnrBuckets,
                "bucket index " << bucket << " out of range");
  double sum = 0.0;
  int count = 0;
  for (const SeedReport &rep : reports) {
    const EvalResult &r = FindResult(rep.results, model, corpus);
    TSADAPT_CHECK(r.buckets.has_value(),
                  "model '" << model << "' on '" << corpus << "' has no buckets");
    const std::optional<double> e = r.buckets->buckets[bucket].ErrorRate();
    if (e) {
      sum += *e;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

// ---------------------------------------------------------------------------
// Trend checks.

std::string CheckStatusName(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "PASS";
    case CheckStatus::kFail: return "FAIL";
    case CheckStatus::kFinding: return "FINDING";
    case CheckStatus::kInsufficientSeeds: return "INSUFFICIENT-SEEDS";
  }
  return "?";
}

namespace {

TrendCheck MakeCheck(const std::string &id, const std::string &description,
                     bool ok, const std::string &detail, size_t seeds,
                     bool trend = true, bool soft = false) {
  TrendCheck c;
  c.id = id;
  c.description = description;
  c.detail = detail;
  c.soft = soft;
  if (trend && seeds < static_cast<size_t>(kMinTrendSeeds))
    c.status = CheckStatus::kInsufficientSeeds;
  else if (ok)
    c.status = CheckStatus::kPass;
  else
    c.status = soft ? CheckStatus::kFinding : CheckStatus::kFail;
  return c;
}

}  // namespace

std::vector<TrendCheck> CheckNoisyTrends(const std::vector<SeedReport> &reports) {
  const std::vector<EvalResult> avg = AverageResults(reports);
  const size_t n = reports.size();
  const auto fer = [&](const char *m, const char *c) { return FindFer(avg, m, c); };
  std::vector<TrendCheck> checks;

  const double t_clean = fer("teacher", "clean"), t_noisy = fer("teacher", "noisy");
  checks.push_back(MakeCheck(
      "A1.teacher", "teacher clean error <= 5% and noisy error >= clean + 10",
      t_clean <= 5.0 && t_noisy - t_clean >= 10.0,
      "clean " + Fmt(t_clean) + ", noisy " + Fmt(t_noisy), n));

  const double s1_clean = fer("ts1x", "clean"), s1_noisy = fer("ts1x", "noisy");
  const double mc_clean = fer("multicond", "clean"), mc_noisy = fer("multicond", "noisy");
  checks.push_back(MakeCheck(
      "A1.student-vs-multicond",
      "1x student below multi-condition on noisy and on clean",
      s1_noisy < mc_noisy && s1_clean < mc_clean,
      "noisy " + Fmt(s1_noisy) + " vs " + Fmt(mc_noisy) + ", clean " +
          Fmt(s1_clean) + " vs " + Fmt(mc_clean),
      n));

  const double s4_noisy = fer("ts4x", "noisy");
  checks.push_back(MakeCheck("A1.scaled-vs-1x",
                             "scaled student noisy error <= 1x student",
                             s4_noisy <= s1_noisy,
                             Fmt(s4_noisy) + " vs " + Fmt(s1_noisy), n));
  checks.push_back(MakeCheck(
      "A1.scaled-near-teacher",
      "scaled student noisy error within 3 points of teacher clean error",
      std::abs(s4_noisy - t_clean) <= 3.0,
      Fmt(s4_noisy) + " vs " + Fmt(t_clean), n));

  const double gap_clone = MeanMetric(reports, "gap.clone");
  const double gap_s4 = MeanMetric(reports, "gap.ts4x");
  checks.push_back(MakeCheck(
      "A1.gap-ratio", "unadapted-clone gap >= 5x scaled-student gap",
      gap_s4 > 0.0 ? gap_clone / gap_s4 >= 5.0 : gap_clone > 0.0,
      Fmt(gap_clone, "%.4f") + " / " + Fmt(gap_s4, "%.4f") + " nats", n));

  bool all_present = true, wins = true;
  std::string detail;
  for (int b = 0; b < kNumSnrBuckets; ++b) {
    const auto t = MeanBucketError(reports, "teacher", "mixed", b);
    const auto s = MeanBucketError(reports, "ts4x", "mixed", b);
    if (!t || !s) {
      all_present = false;
      detail += "b" + std::to_string(b) + " empty; ";
      continue;
    }
    detail += "b" + std::to_string(b) + " " + Fmt(*s) + " vs " + Fmt(*t) + "; ";
    if (b <= static_cast<int>(SnrBucket::kFrom20To35) && *s > *t) wins = false;
  }
  checks.push_back(MakeCheck(
      "A2.buckets",
      "four buckets reported; scaled student <= teacher in every bucket below 35 dB",
      all_present && wins, detail, n));

  const bool has_pseudo =
      std::all_of(reports.begin(), reports.end(), [](const SeedReport &r) {
        return r.metrics.count("endpoint.ts") > 0;
      });
  if (has_pseudo) {
    const double p_noisy = fer("pseudo", "noisy");
    checks.push_back(MakeCheck(
        "A5.pseudo", "pseudo-label noisy error >= 1x student noisy error",
        p_noisy >= s1_noisy, Fmt(p_noisy) + " vs " + Fmt(s1_noisy), n, true,
        true));
    double worst = 0.0;
    for (const SeedReport &r : reports) {
      worst = std::max(worst, std::abs(r.metrics.at("endpoint.lambda1") -
                                       r.metrics.at("endpoint.ts")));
      worst = std::max(worst, std::abs(r.metrics.at("endpoint.lambda0") -
                                       r.metrics.at("endpoint.hard")));
    }
    checks.push_back(MakeCheck(
        "A5.endpoints",
        "interpolated objectives at lambda 0 and 1 match hard and soft training",
        worst <= 1e-9, "max difference " + Fmt(worst, "%.3g"), n, false));
  }
  return checks;
}

std::vector<TrendCheck> CheckMismatchTrends(
    const std::vector<SeedReport> &reports) {
  const std::vector<EvalResult> avg = AverageResults(reports);
  const double s1 = FindFer(avg, "ts1x", "heldout");
  const double s4 = FindFer(avg, "ts4x", "heldout");
  return {MakeCheck("A3.unseen-noise",
                    "scaled student <= 1x student on the held-out noise type",
                    s4 <= s1, Fmt(s4) + " vs " + Fmt(s1), reports.size())};
}

std::vector<TrendCheck> CheckChildrenTrends(
    const std::vector<SeedReport> &reports) {
  const std::vector<EvalResult> avg = AverageResults(reports);
  const size_t n = reports.size();
  std::vector<TrendCheck> checks;
  const double adult = FindFer(avg, "teacher", "adult");
  const double child = FindFer(avg, "teacher", "child");
  const double adapted = FindFer(avg, "ts-warped", "child");
  checks.push_back(MakeCheck("A4.warp-gap",
                             "teacher warped error >= unwarped error + 10",
                             child - adult >= 10.0,
                             Fmt(child) + " vs " + Fmt(adult), n));
  const double gap = child - adult;
  checks.push_back(MakeCheck(
      "A4.recovery", "adapted student closes >= 50% of the warp gap",
      gap > 0.0 && child - adapted >= 0.5 * gap,
      "warped error " + Fmt(child) + " -> " + Fmt(adapted) + " (gap " +
          Fmt(gap) + ")",
      n));
  double worst = 0.0;
  std::string detail;
  for (const SeedReport &r : reports) {
    const double diff = 100.0 * std::abs(r.metrics.at("filter.retained_fraction") -
                                         r.metrics.at("filter.true_fraction"));
    worst = std::max(worst, diff);
    detail += "seed " + std::to_string(r.seed) + ": retained " +
              Fmt(100.0 * r.metrics.at("filter.retained_fraction")) +
              "% vs true " + Fmt(100.0 * r.metrics.at("filter.true_fraction")) +
              "% (classifier " + Fmt(r.metrics.at("classifier.accuracy")) +
              "% on speech frames); ";
  }
  checks.push_back(MakeCheck(
      "A4.filter", "retained fraction within 5 points of the true share",
      worst <= 5.0, detail, n, false));
  return checks;
}

std::string SeedBucketTable(const std::vector<SeedReport> &reports,
                            const std::string &teacher,
                            const std::string &student,
                            const std::string &corpus) {
  static const char *kNames[kNumSnrBuckets] = {"<5 dB", "[5,20) dB",
                                               "[20,35) dB", ">=35 dB"};
  std::string out = "SNR          " + teacher + "    " + student + "    utterances\n";
  for (int b = 0; b < kNumSnrBuckets; ++b) {
    const auto t = MeanBucketError(reports, teacher, corpus, b);
    const auto s = MeanBucketError(reports, student, corpus, b);
    int64_t utts = 0;
    for (const SeedReport &rep : reports)
      utts += FindResult(rep.results, student, corpus).buckets->buckets[b].utterances;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %10lld\n", kNames[b],
                  t ? Fmt(*t).c_str() : "-", s ? Fmt(*s).c_str() : "-",
                  static_cast<long long>(utts));
    out += line;
  }
  int64_t sentinel = 0;
  for (const SeedReport &rep : reports)
    sentinel += FindResult(rep.results, student, corpus).buckets->sentinel.utterances;
  out += "(" + std::to_string(sentinel) + " utterances without an SNR estimate)\n";
  return out;
}

std::string ChecksText(const std::vector<TrendCheck> &checks) {
  std::string out;
  for (const TrendCheck &c : checks) {
    out += CheckStatusName(c.status) + "  " + c.id + "  " + c.description;
    if (c.soft) out += " [soft]";
    out += "\n      " + c.detail + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios.

ScenarioOutput RunScenario(Scenario scenario, const SuiteConfig &cfg,
                           int num_seeds, uint64_t base_seed,
                           const std::string &out_dir, int jobs,
                           const ProgressFn &progress) {
  TSADAPT_CHECK(num_seeds >= 1, "need at least one seed");
  TSADAPT_CHECK(jobs >= 1, "jobs must be at least 1");
  cfg.Validate();
  fs::create_directories(out_dir);
  ScenarioOutput out;
  out.reports.resize(num_seeds);
  const int seed_jobs = std::min(jobs, num_seeds);
  const int inner_jobs = std::max(1, jobs / seed_jobs);
  std::mutex progress_mutex;
  const ProgressFn locked = [&](const std::string &line) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(progress_mutex);
    progress(line);
  };
  ParallelFor(num_seeds, seed_jobs, [&](size_t i) {
    const uint64_t seed = base_seed + i + 1;
    const std::string dir = out_dir + "/seed" + std::to_string(seed);
    out.reports[i] =
        scenario == Scenario::kChildren
            ? RunChildrenSeed(cfg, seed, dir, nullptr, inner_jobs, locked)
            : RunNoisySeed(cfg, seed, dir, scenario == Scenario::kNoisy,
                           inner_jobs, locked);
  });

  const std::vector<EvalResult> avg = AverageResults(out.reports);
  std::string table = ScenarioName(scenario) + " scenario, frame error (%) averaged over " +
                      std::to_string(num_seeds) + " seed(s)\n\n";
  switch (scenario) {
    case Scenario::kNoisy:
      out.checks = CheckNoisyTrends(out.reports);
      table += ExperimentTable(OnCorpora(avg, {"clean", "noisy"}));
      table += "\nSNR breakdown of the mixed-SNR test set\n\n";
      table += SeedBucketTable(out.reports, "teacher", "ts4x", "mixed");
      break;
    case Scenario::kMismatch:
      out.checks = CheckMismatchTrends(out.reports);
      table += ExperimentTable(OnCorpora(avg, {"heldout"}));
      break;
    case Scenario::kChildren:
      out.checks = CheckChildrenTrends(out.reports);
      table += ExperimentTable(OnCorpora(avg, {"adult", "child"}));
      break;
  }
  out.table = table;

  const auto write = [&](const std::string &name, const std::string &text) {
    std::ofstream f(out_dir + "/" + name, std::ios::binary);
    TSADAPT_CHECK(f, "cannot write '" << out_dir << "/" << name << "'");
    f << text;
  };
  write("table.txt", out.table);
  write("checks.txt", ChecksText(out.checks));
  write("results.jsonl", EmitResults(avg));
  return out;
}

}  // namespace tsadapt
