// tools/cli.cc

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

#include "cli.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "run_config.h"
#include "tsadapt/corpus.h"
#include "tsadapt/distill.h"
#include "tsadapt/eval.h"
#include "tsadapt/experiments.h"
#include "tsadapt/nnet.h"

namespace tsadapt {
namespace cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &what) : std::runtime_error(what) {}
};

struct Globals {
  int jobs = 1;
  bool quiet = false;
};

std::string OutRoot() {
  const char *env = std::getenv(kOutRootEnv);
  return env != nullptr && *env != '\0' ? env : "tsadapt-out";
}

std::string ReadText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out << text;
  TSADAPT_CHECK(out.good(), "failed writing " << path);
}

void EnsureParent(const std::string &path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

ProgressFn Progress(const Globals &g) {
  if (g.quiet) return nullptr;
  return [](const std::string &line) { std::cerr << "tsadapt: " << line << "\n"; };
}

void Log(const Globals &g, const std::string &line) {
  if (!g.quiet) std::cerr << "tsadapt: " << line << "\n";
}

std::vector<int> ParseDims(const std::string &text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      dims.push_back(v);
    } catch (const std::exception &) {
      throw UsageError("--hidden expects comma-separated positive sizes, got '" +
                       text + "'");
    }
  }
  if (dims.empty()) throw UsageError("--hidden needs at least one size");
  return dims;
}

std::pair<double, double> ParseSnrRange(const std::string &text) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw UsageError("--snr expects lo:hi, got '" + text + "'");
  try {
    size_t a = 0, b = 0;
    const double lo = std::stod(text.substr(0, colon), &a);
    const double hi = std::stod(text.substr(colon + 1), &b);
    if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument(text);
    if (lo > hi) throw UsageError("--snr lower bound exceeds upper bound in '" + text + "'");
    return {lo, hi};
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &) {
    throw UsageError("--snr expects numeric lo:hi, got '" + text + "'");
  }
}

nlohmann::ordered_json AsJson(const std::string &text) {
  return nlohmann::ordered_json::parse(text);
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string spec;
  int count = 100;
  uint64_t seed = 1;
  std::string out;
  std::string prefix = "utt";
};

int CmdSynth(const SynthArgs &a, const Globals &g) {
  const SynthSpec spec = SynthSpec::FromJson(ReadText(a.spec));
  const std::string out = a.out.empty() ? OutRoot() + "/corpus" : a.out;
  fs::create_directories(out);
  Log(g, "synthesising " + std::to_string(a.count) + " utterances into " + out);
  const auto records = SynthCorpus(spec, a.count, a.seed, out, {}, g.jobs, a.prefix);
  const std::string manifest = out + "/manifest.tsv";
  WriteManifest(manifest, CorpusManifest(records));
  RunConfig rc;
  rc.command = "synth";
  rc.Add("spec", a.spec);
  rc.Add("count", std::to_string(a.count));
  rc.Add("seed", std::to_string(a.seed));
  rc.Add("out", out);
  rc.Add("prefix", a.prefix);
  rc.resolved["spec"] = AsJson(spec.ToJson());
  rc.Write(out + "/config.json");
  std::cout << manifest << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// noise

struct NoiseArgs {
  std::string kinds = "white,brown";
  double duration = 5.0;
  int sample_rate = 16000;
  uint64_t seed = 1;
  std::string out;
};

int CmdNoise(const NoiseArgs &a, const Globals &g) {
  std::vector<NoiseKind> kinds;
  std::stringstream ss(a.kinds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      kinds.push_back(ParseNoiseKind(item));
    } catch (const std::exception &e) {
      throw UsageError(e.what());
    }
  }
  if (kinds.empty()) throw UsageError("--kinds needs at least one noise type");
  const std::string out = a.out.empty() ? OutRoot() + "/noise" : a.out;
  fs::create_directories(out);
  const auto noises = SynthNoiseSet(kinds, a.duration, a.sample_rate, a.seed, out);
  Log(g, "wrote " + std::to_string(noises.size()) + " noise recordings to " + out);
  RunConfig rc;
  rc.command = "noise";
  rc.Add("kinds", a.kinds);
  rc.Add("duration", Num(a.duration));
  rc.Add("sample-rate", std::to_string(a.sample_rate));
  rc.Add("seed", std::to_string(a.seed));
  rc.Add("out", out);
  rc.Write(out + "/config.json");
  for (const NoiseSource &n : noises) std::cout << n.path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// pair

struct PairArgs {
  std::string mode;
  std::string in;
  std::string noise;
  double alpha = 0.1;
  std::string snr = "5:20";
  uint64_t seed = 1;
  int scale = 1;
  std::string out;
};

int CmdPair(const PairArgs &a, const Globals &g) {
  if (a.mode != "noisy" && a.mode != "warped")
    throw UsageError("--mode must be noisy or warped, got '" + a.mode + "'");
  if (a.mode == "noisy" && a.noise.empty())
    throw UsageError("--mode noisy needs --noise <dir>");
  if (a.mode == "warped" && !(std::abs(a.alpha) < 1.0))
    throw UsageError("--alpha must satisfy |alpha| < 1, got " + Num(a.alpha));
  if (a.scale < 1) throw UsageError("--scale must be at least 1");
  if (a.mode == "warped" && a.scale != 1)
    throw UsageError("--scale applies to --mode noisy only");
  const auto [lo, hi] = ParseSnrRange(a.snr);

  const std::string out = a.out.empty() ? OutRoot() + "/pairs/manifest.tsv" : a.out;
  EnsureParent(out);
  const std::string data_dir =
      fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string();
  const std::vector<UtteranceRecord> sources = ReadManifest(a.in).Sources();

  RunConfig rc;
  rc.command = "pair";
  rc.Add("mode", a.mode);
  rc.Add("in", a.in);
  ParallelManifest manifest;
  if (a.mode == "noisy") {
    const std::vector<NoiseSource> noises = LoadNoiseDir(a.noise);
    Log(g, "mixing " + std::to_string(sources.size()) + " utterances with " +
               std::to_string(noises.size()) + " noise recordings");
    manifest = BuildNoisyParallel(sources, noises, lo, hi, a.seed, data_dir, {}, g.jobs);
    if (a.scale > 1) {
      Log(g, "scaling to " + std::to_string(a.scale) + "x");
      manifest = ScaleCorpus(manifest, a.scale, DeriveSeed(a.seed, a.scale), data_dir, g.jobs);
    }
    rc.Add("noise", a.noise);
    rc.Add("snr", a.snr);
    rc.Add("scale", std::to_string(a.scale));
  } else {
    Log(g, "warping " + std::to_string(sources.size()) + " utterances");
    manifest = BuildWarpedParallel(sources, a.alpha, a.seed, data_dir, {}, g.jobs);
    rc.Add("alpha", Num(a.alpha));
  }
  WriteManifest(out, manifest);
  rc.Add("seed", std::to_string(a.seed));
  rc.Add("out", out);
  rc.Write(out + ".config.json");
  std::cout << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string mode;
  std::string teacher;
  std::string data;
  double lambda = -1.0;
  std::string config;
  int epochs = 0;
  double lr = 0.0;
  uint64_t seed = 1;
  int context = 5;
  std::string hidden = "256,256";
  std::string activation = "tanh";
  bool keep_teacher_norm = false;
  std::string out;
};

int CmdTrain(const TrainArgs &a, const Globals &g) {
  const bool scratch = a.mode == "teacher" || a.mode == "multicond";
  if (!scratch && a.mode != "ts" && a.mode != "pseudo" && a.mode != "interp")
    throw UsageError("--mode must be teacher, multicond, ts, pseudo or interp, got '" +
                     a.mode + "'");
  if (!scratch && a.teacher.empty())
    throw UsageError("--mode " + a.mode + " needs --teacher <checkpoint>");
  if (scratch && !a.teacher.empty())
    throw UsageError("--teacher is not used by --mode " + a.mode);
  if (a.mode == "interp" && a.lambda < 0.0)
    throw UsageError("--mode interp needs --lambda in [0, 1]");
  if (a.mode != "interp" && a.lambda >= 0.0)
    throw UsageError("--lambda applies to --mode interp only");
  const std::vector<int> hidden = ParseDims(a.hidden);
  Activation act;
  try {
    act = ParseActivation(a.activation);
  } catch (const std::exception &e) {
    throw UsageError(e.what());
  }

  TsConfig cfg = a.config.empty() ? TsConfig{} : TsConfig::FromJson(ReadText(a.config));
  if (a.config.empty() && !scratch) cfg.learning_rate = 0.01;
  if (a.epochs > 0) cfg.max_epochs = a.epochs;
  if (a.lr > 0.0) cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.Validate();

  const std::string out = a.out.empty() ? OutRoot() + "/models/" + a.mode + ".net" : a.out;
  EnsureParent(out);
  const ParallelManifest manifest = ReadManifest(a.data);
  const ParallelData data = LoadParallelData(manifest, g.jobs);
  Log(g, "training " + a.mode + " on " + std::to_string(data.size()) + " utterances");

  TrainResult result;
  if (scratch) {
    const std::vector<LabeledFeatures> labelled =
        a.mode == "teacher" ? SourceSide(data) : TargetSide(data);
    for (const LabeledFeatures &u : labelled)
      TSADAPT_CHECK(u.HasLabels(), "utterance '" << u.id << "' has no labels");
    int classes = 0;
    for (const LabeledFeatures &u : labelled)
      for (int32_t l : u.labels) classes = std::max(classes, l + 1);
    std::vector<int> dims = {labelled.front().features.Dim() * (2 * a.context + 1)};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(classes);
    Network init = InitNetwork(dims, act, DeriveSeed(a.seed, 0x1717), {a.context});
    std::vector<const Matrix *> inputs;
    for (const LabeledFeatures &u : labelled) inputs.push_back(&u.features.values);
    FitInputNormalization(inputs, &init);
    result = TrainHard(init, labelled, cfg);
  } else {
    const Network teacher = ReadNetwork(a.teacher);
    std::vector<const Matrix *> targets;
    for (const FeaturePair &p : data) targets.push_back(&p.target.values);
    const Network init = a.keep_teacher_norm ? teacher : CloneForTarget(teacher, targets);
    if (a.mode == "ts") {
      result = TsAdapt(teacher, data, cfg, &init);
    } else if (a.mode == "pseudo") {
      std::vector<FeatureMatrix> feats;
      for (const FeaturePair &p : data) feats.push_back(p.target);
      result = PseudoLabelAdapt(teacher, feats, cfg, &init);
    } else {
      result = InterpolatedDistill(teacher, data, a.lambda, cfg, &init);
    }
  }
  WriteNetwork(out, result.net);
  WriteLossReport(out + ".loss", result.report);

  RunConfig rc;
  rc.command = "train";
  rc.Add("mode", a.mode);
  rc.Add("data", a.data);
  if (!a.teacher.empty()) rc.Add("teacher", a.teacher);
  if (a.mode == "interp") rc.Add("lambda", Num(a.lambda));
  if (!a.config.empty()) rc.Add("config", a.config);
  rc.Add("epochs", std::to_string(cfg.max_epochs));
  rc.Add("lr", Num(cfg.learning_rate));
  rc.Add("seed", std::to_string(a.seed));
  if (scratch) {
    rc.Add("context", std::to_string(a.context));
    rc.Add("hidden", a.hidden);
    rc.Add("activation", a.activation);
  }
  rc.AddSwitch("keep-teacher-norm", a.keep_teacher_norm);
  rc.Add("out", out);
  rc.resolved["training"] = AsJson(cfg.ToJson());
  rc.Write(out + ".config.json");

  const EpochRecord &last = result.report.Final();
  std::string line = "epochs " + std::to_string(last.epoch) + ", train " +
                     Num(last.train_objective) + ", validation " +
                     Num(last.validation_objective);
  if (last.validation_fer) line += ", validation error " + Num(*last.validation_fer) + "%";
  Log(g, line);
  std::cout << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string ref_model;
  bool buckets = false;
  std::string side = "target";
  std::string corpus_id;
  std::string out;
};

int CmdEval(const EvalArgs &a, const Globals &g) {
  if (a.side != "target" && a.side != "source")
    throw UsageError("--side must be target or source, got '" + a.side + "'");
  const bool target = a.side == "target";
  const Network net = ReadNetwork(a.model);
  std::optional<Network> ref;
  if (!a.ref_model.empty()) ref = ReadNetwork(a.ref_model);
  const ParallelManifest manifest = ReadManifest(a.data);
  const ParallelData data = LoadParallelData(manifest, g.jobs);
  const std::vector<LabeledFeatures> eval = target ? TargetSide(data) : SourceSide(data);
  for (const LabeledFeatures &u : eval)
    TSADAPT_CHECK(u.HasLabels(), "utterance '" << u.id << "' has no labels to score");

  std::vector<double> snrs;
  if (a.buckets) {
    snrs.resize(manifest.size());
    ParallelFor(manifest.size(), g.jobs, [&](size_t i) {
      const UtteranceRecord &r = target ? manifest.pairs[i].target : manifest.pairs[i].source;
      TSADAPT_CHECK(!r.wave_path.empty(),
                    "--buckets needs waveforms; '" << r.id << "' has none");
      const FeatureMatrix header = ReadFeatureHeader(r.feature_path);
      snrs[i] = EstimateSnr(ReadWav(r.wave_path), header.frame_len, header.hop);
    });
  }
  const std::vector<UtteranceScore> scores = ScoreUtterances(net, eval, snrs, g.jobs);

  EvalResult r;
  r.model_id = fs::path(a.model).stem().string();
  r.corpus_id = !a.corpus_id.empty() ? a.corpus_id
                : fs::path(a.data).parent_path().filename().string();
  if (r.corpus_id.empty()) r.corpus_id = fs::path(a.data).stem().string();
  r.teacher_data = "-";
  r.student_data = "-";
  r.fer = CorpusErrorRate(scores);
  for (const UtteranceScore &s : scores) r.frames += s.frames;
  if (ref) {
    TSADAPT_CHECK(target, "--ref-model compares the reference on sources with the "
                          "model on targets; use --side target");
    r.mean_kl = BehavioralGap(*ref, net, data, g.jobs);
  }
  if (a.buckets) r.buckets = BucketBreakdown(scores);

  std::printf("%-20s %-20s %10s %10s%s\n", "model", "corpus", "error(%)", "frames",
              ref ? "   gap(nats)" : "");
  std::printf("%-20s %-20s %10.2f %10lld", r.model_id.c_str(), r.corpus_id.c_str(),
              r.fer, static_cast<long long>(r.frames));
  if (r.mean_kl) std::printf(" %11.5f", *r.mean_kl);
  std::printf("\n");
  if (r.buckets) std::printf("\n%s", BucketTable(*r.buckets).c_str());
  std::fflush(stdout);

  if (!a.out.empty()) {
    EnsureParent(a.out);
    WriteText(a.out, EmitResults({r}));
    RunConfig rc;
    rc.command = "eval";
    rc.Add("model", a.model);
    rc.Add("data", a.data);
    if (!a.ref_model.empty()) rc.Add("ref-model", a.ref_model);
    rc.AddSwitch("buckets", a.buckets);
    rc.Add("side", a.side);
    rc.Add("corpus-id", r.corpus_id);
    rc.Add("out", a.out);
    rc.Write(a.out + ".config.json");
    Log(g, "wrote " + a.out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// paper-suite

struct SuiteArgs {
  std::string scenario;
  int seeds = 3;
  uint64_t base_seed = 0;
  std::string config;
  std::string out;
  bool strict = false;
};

int CmdSuite(const SuiteArgs &a, const Globals &g) {
  Scenario scenario;
  try {
    scenario = ParseScenario(a.scenario);
  } catch (const std::exception &e) {
    throw UsageError(e.what());
  }
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");
  const SuiteConfig cfg =
      a.config.empty() ? SuiteConfig{} : SuiteConfig::FromJson(ReadText(a.config));
  cfg.Validate();
  const std::string out =
      a.out.empty() ? OutRoot() + "/suite-" + a.scenario : a.out;
  fs::create_directories(out);

  RunConfig rc;
  rc.command = "paper-suite";
  rc.Add("scenario", a.scenario);
  rc.Add("seeds", std::to_string(a.seeds));
  rc.Add("base-seed", std::to_string(a.base_seed));
  if (!a.config.empty()) rc.Add("config", a.config);
  rc.Add("out", out);
  rc.AddSwitch("strict", a.strict);
  rc.resolved["suite"] = AsJson(cfg.ToJson());
  rc.Write(out + "/config.json");

  const ScenarioOutput result =
      RunScenario(scenario, cfg, a.seeds, a.base_seed, out, g.jobs, Progress(g));
  std::cout << result.table << "\n" << ChecksText(result.checks);
  std::cout.flush();
  if (a.strict)
    for (const TrendCheck &c : result.checks)
      if (c.status == CheckStatus::kFail) return kExitFailure;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// defaults

int CmdDefaults(const std::string &what) {
  if (what == "spec") std::cout << SynthSpec{}.ToJson() << "\n";
  else if (what == "suite-spec") std::cout << SuiteSynthSpec().ToJson() << "\n";
  else if (what == "train") std::cout << TsConfig{}.ToJson() << "\n";
  else if (what == "suite") std::cout << SuiteConfig{}.ToJson() << "\n";
  else throw UsageError("defaults expects spec, suite-spec, train or suite, got '" + what + "'");
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string> &args) {
  CLI::App app{"Teacher/student domain adaptation on synthetic speech-like data",
               "tsadapt"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "No progress on standard error");

  SynthArgs synth;
  CLI::App *c_synth = app.add_subcommand("synth", "Synthesise a labelled corpus");
  c_synth->add_option("--spec", synth.spec, "SynthSpec JSON file")->required();
  c_synth->add_option("--count", synth.count, "Utterances")->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "Seed");
  c_synth->add_option("--out", synth.out, "Output directory");
  c_synth->add_option("--prefix", synth.prefix, "Utterance id prefix");

  NoiseArgs noise;
  CLI::App *c_noise = app.add_subcommand("noise", "Synthesise noise recordings");
  c_noise->add_option("--kinds", noise.kinds, "Comma-separated: white, brown, modulated, hum");
  c_noise->add_option("--duration", noise.duration, "Seconds")->check(CLI::PositiveNumber);
  c_noise->add_option("--sample-rate", noise.sample_rate, "Hz")->check(CLI::PositiveNumber);
  c_noise->add_option("--seed", noise.seed, "Seed");
  c_noise->add_option("--out", noise.out, "Output directory");

  PairArgs pair;
  CLI::App *c_pair = app.add_subcommand("pair", "Build a parallel corpus");
  c_pair->add_option("--mode", pair.mode, "noisy or warped")->required();
  c_pair->add_option("--in", pair.in, "Clean corpus manifest")->required();
  c_pair->add_option("--noise", pair.noise, "Directory of noise .wav files");
  c_pair->add_option("--alpha", pair.alpha, "Warp factor, |alpha| < 1");
  c_pair->add_option("--snr", pair.snr, "SNR range lo:hi in dB");
  c_pair->add_option("--seed", pair.seed, "Seed");
  c_pair->add_option("--scale", pair.scale, "Distinct draws per utterance (noisy)");
  c_pair->add_option("--out", pair.out, "Output manifest path");

  TrainArgs train;
  CLI::App *c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--mode", train.mode, "teacher, multicond, ts, pseudo or interp")->required();
  c_train->add_option("--data", train.data, "Manifest")->required();
  c_train->add_option("--teacher", train.teacher, "Teacher checkpoint");
  c_train->add_option("--lambda", train.lambda, "Soft-target weight for interp")
      ->check(CLI::Range(0.0, 1.0));
  c_train->add_option("--config", train.config, "Training config JSON");
  c_train->add_option("--epochs", train.epochs, "Override max epochs")->check(CLI::PositiveNumber);
  c_train->add_option("--lr", train.lr, "Override learning rate")->check(CLI::PositiveNumber);
  c_train->add_option("--seed", train.seed, "Seed");
  c_train->add_option("--context", train.context, "Context frames each side")
      ->check(CLI::NonNegativeNumber);
  c_train->add_option("--hidden", train.hidden, "Hidden sizes, comma-separated");
  c_train->add_option("--activation", train.activation, "tanh or relu");
  c_train->add_flag("--keep-teacher-norm", train.keep_teacher_norm,
                    "Keep the teacher's input normalisation for the student");
  c_train->add_option("--out", train.out, "Output checkpoint");

  EvalArgs eval;
  CLI::App *c_eval = app.add_subcommand("eval", "Evaluate a model");
  c_eval->add_option("--model", eval.model, "Checkpoint")->required();
  c_eval->add_option("--data", eval.data, "Manifest")->required();
  c_eval->add_option("--ref-model", eval.ref_model, "Reference (teacher) checkpoint");
  c_eval->add_flag("--buckets", eval.buckets, "SNR-bucket breakdown");
  c_eval->add_option("--side", eval.side, "target or source");
  c_eval->add_option("--corpus-id", eval.corpus_id, "Corpus label in the results");
  c_eval->add_option("--out", eval.out, "Result lines (JSON)");

  SuiteArgs suite;
  CLI::App *c_suite = app.add_subcommand("paper-suite", "Run a scripted experiment");
  c_suite->add_option("--scenario", suite.scenario, "noisy, mismatch or children")->required();
  c_suite->add_option("--seeds", suite.seeds, "Number of seeds");
  c_suite->add_option("--base-seed", suite.base_seed, "Seeds are base+1..base+k");
  c_suite->add_option("--config", suite.config, "Suite config JSON");
  c_suite->add_option("--out", suite.out, "Output directory");
  c_suite->add_flag("--strict", suite.strict, "Exit 1 when a trend check fails");

  std::string defaults_what;
  CLI::App *c_defaults = app.add_subcommand("defaults", "Print a default config");
  c_defaults->add_option("what", defaults_what, "spec, suite-spec, train or suite")->required();

  std::string rerun_path;
  CLI::App *c_rerun = app.add_subcommand("rerun", "Rerun a saved resolved config");
  c_rerun->add_option("config", rerun_path, "config.json written by a command")->required();

  std::vector<std::string> argv_store = {"tsadapt"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (std::string &s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return CmdSynth(synth, g);
    if (c_noise->parsed()) return CmdNoise(noise, g);
    if (c_pair->parsed()) return CmdPair(pair, g);
    if (c_train->parsed()) return CmdTrain(train, g);
    if (c_eval->parsed()) return CmdEval(eval, g);
    if (c_suite->parsed()) return CmdSuite(suite, g);
    if (c_defaults->parsed()) return CmdDefaults(defaults_what);
    if (c_rerun->parsed()) {
      std::vector<std::string> again = RunConfig::Read(rerun_path).ToArgs();
      if (g.quiet) again.insert(again.begin(), "--quiet");
      again.insert(again.begin(), {"--jobs", std::to_string(g.jobs)});
      return Run(again);
    }
  } catch (const UsageError &e) {
    std::cerr << "tsadapt: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "tsadapt: error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cli
}  // namespace tsadapt
