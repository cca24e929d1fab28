// core/src/distill.cc

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

#include "tsadapt/distill.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tsadapt {

// ---------------------------------------------------------------------------
// Config and report.

void TsConfig::Validate() const {
  TSADAPT_CHECK(batch_frames >= 1, "batch_frames must be positive, got "
                                       << batch_frames);
  TSADAPT_CHECK(max_epochs >= 1, "max_epochs must be positive, got "
                                     << max_epochs);
  TSADAPT_CHECK(learning_rate > 0.0, "learning_rate must be positive");
  TSADAPT_CHECK(lr_decay > 0.0 && lr_decay <= 1.0,
                "lr_decay must be in (0, 1], got " << lr_decay);
  TSADAPT_CHECK(momentum >= 0.0 && momentum < 1.0,
                "momentum must be in [0, 1), got " << momentum);
  TSADAPT_CHECK(tol > 0.0, "convergence tol must be positive, got " << tol);
  TSADAPT_CHECK(patience >= 1, "patience must be at least 1");
  TSADAPT_CHECK(validation_fraction >= 0.0 && validation_fraction < 1.0,
                "validation_fraction must be in [0, 1)");
}

std::string TsConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["batch_frames"] = batch_frames;
  j["max_epochs"] = max_epochs;
  j["learning_rate"] = learning_rate;
  j["lr_decay"] = lr_decay;
  j["momentum"] = momentum;
  j["tol"] = tol;
  j["patience"] = patience;
  j["validation_fraction"] = validation_fraction;
  j["seed"] = seed;
  return j.dump(2);
}

TsConfig TsConfig::FromJson(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(Msg() << "training config is not valid JSON: " << e.what());
  }
  TSADAPT_CHECK(j.is_object(), "training config must be a JSON object");
  TsConfig cfg;
  for (const auto &[key, value] : j.items()) {
    try {
      if (key == "batch_frames") value.get_to(cfg.batch_frames);
      else if (key == "max_epochs") value.get_to(cfg.max_epochs);
      else if (key == "learning_rate") value.get_to(cfg.learning_rate);
      else if (key == "lr_decay") value.get_to(cfg.lr_decay);
      else if (key == "momentum") value.get_to(cfg.momentum);
      else if (key == "tol") value.get_to(cfg.tol);
      else if (key == "patience") value.get_to(cfg.patience);
      else if (key == "validation_fraction") value.get_to(cfg.validation_fraction);
      else if (key == "seed") value.get_to(cfg.seed);
      else throw Error(Msg() << "training config has unknown field '" << key << "'");
    } catch (const nlohmann::json::exception &e) {
      throw Error(Msg() << "training config field '" << key
                        << "' has the wrong type: " << e.what());
    }
  }
  cfg.Validate();
  return cfg;
}

const EpochRecord &LossReport::Final() const {
  TSADAPT_CHECK(!epochs.empty(), "loss report is empty");
  return epochs.back();
}

std::string LossReport::ToText() const {
  std::string out = "# epoch\ttrain_objective\tvalidation_objective\t"
                    "validation_fer\twall_seconds\n";
  char buf[256];
  for (const EpochRecord &e : epochs) {
    std::string fer = "NA";
    if (e.validation_fer) {
      std::snprintf(buf, sizeof(buf), "%.17g", *e.validation_fer);
      fer = buf;
    }
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%s\t%.3f\n", e.epoch,
                  e.train_objective, e.validation_objective, fer.c_str(),
                  e.wall_seconds);
    out += buf;
  }
  return out;
}

LossReport LossReport::FromText(const std::string &text) {
  LossReport report;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string epoch, train, val, fer, wall;
    TSADAPT_CHECK(std::getline(fields, epoch, '\t') &&
                      std::getline(fields, train, '\t') &&
                      std::getline(fields, val, '\t') &&
                      std::getline(fields, fer, '\t') &&
                      std::getline(fields, wall, '\t'),
                  "loss report line " << line_no << " needs 5 fields");
    EpochRecord e;
    try {
      e.epoch = std::stoi(epoch);
      e.train_objective = std::stod(train);
      e.validation_objective = std::stod(val);
      if (fer != "NA") e.validation_fer = std::stod(fer);
      e.wall_seconds = std::stod(wall);
    } catch (const std::exception &) {
      throw Error(Msg() << "loss report line " << line_no << " is malformed");
    }
    report.epochs.push_back(e);
  }
  return report;
}

void WriteLossReport(const std::string &path, const LossReport &report) {
  std::ofstream out(path, std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out << report.ToText();
  TSADAPT_CHECK(out.good(), "failed writing loss report " << path);
}

LossReport ReadLossReport(const std::string &path) {
  std::ifstream in(path);
  TSADAPT_CHECK(in.good(), "cannot open loss report " << path);
  std::stringstream buf;
  buf << in.rdbuf();
  return LossReport::FromText(buf.str());
}

// ---------------------------------------------------------------------------
// Losses.

double KlDivergence(const PosteriorMatrix &teacher,
                    const PosteriorMatrix &student) {
  TSADAPT_CHECK(teacher.NumFrames() == student.NumFrames() &&
                    teacher.NumClasses() == student.NumClasses(),
                "KL shape mismatch: teacher " << teacher.NumFrames() << "x"
                                              << teacher.NumClasses()
                                              << " vs student "
                                              << student.NumFrames() << "x"
                                              << student.NumClasses());
  const Matrix &t = teacher.values();
  const Matrix &s = student.values();
  double kl = 0.0;
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      kl += t(r, c) * (std::log(t(r, c)) - std::log(s(r, c)));
  return kl;
}

double Entropy(const PosteriorMatrix &posteriors) {
  const Matrix &p = posteriors.values();
  double h = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) h -= p(r, c) * std::log(p(r, c));
  return h;
}

namespace {

// -sum targets * log softmax(logits) with the posterior floor; gradient
// (softmax - targets) scaled by `grad_scale`.
double TargetCrossEntropy(const Matrix &targets, const Matrix &logits,
                          double grad_scale, Matrix *grad) {
  Matrix probs;
  SoftmaxRowsWithFloor(logits, &probs);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    for (Eigen::Index c = 0; c < probs.cols(); ++c)
      if (targets(r, c) != 0.0) loss -= targets(r, c) * std::log(probs(r, c));
  if (grad != nullptr) *grad = (probs - targets) * grad_scale;
  return loss;
}

Matrix OneHot(const std::vector<int32_t> &labels, int num_classes) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (size_t f = 0; f < labels.size(); ++f) {
    TSADAPT_CHECK(labels[f] >= 0 && labels[f] < num_classes,
                  "label " << labels[f] << " at frame " << f
                           << " is outside [0, " << num_classes << ")");
    m(static_cast<Eigen::Index>(f), labels[f]) = 1.0;
  }
  return m;
}

}  // namespace

LossAndGradient SoftCeLoss(const PosteriorMatrix &teacher,
                           const Matrix &student_logits) {
  TSADAPT_CHECK(teacher.NumFrames() == student_logits.rows() &&
                    teacher.NumClasses() == student_logits.cols(),
                "soft-CE shape mismatch: teacher "
                    << teacher.NumFrames() << "x" << teacher.NumClasses()
                    << " vs logits " << student_logits.rows() << "x"
                    << student_logits.cols());
  LossAndGradient out;
  out.loss = TargetCrossEntropy(teacher.values(), student_logits, 1.0,
                                &out.dloss_dlogits);
  return out;
}

LossAndGradient HardCeLoss(const std::vector<int32_t> &labels,
                           const Matrix &logits) {
  TSADAPT_CHECK(static_cast<Eigen::Index>(labels.size()) == logits.rows(),
                labels.size() << " labels for " << logits.rows() << " frames");
  LossAndGradient out;
  out.loss = TargetCrossEntropy(OneHot(labels, static_cast<int>(logits.cols())),
                                logits, 1.0, &out.dloss_dlogits);
  return out;
}

LossAndGradient InterpolatedLoss(const PosteriorMatrix &teacher,
                                 const std::vector<int32_t> &labels,
                                 const Matrix &logits, double lambda) {
  TSADAPT_CHECK(lambda >= 0.0 && lambda <= 1.0,
                "lambda must be in [0, 1], got " << lambda);
  const LossAndGradient soft = SoftCeLoss(teacher, logits);
  const LossAndGradient hard = HardCeLoss(labels, logits);
  LossAndGradient out;
  out.loss = lambda * soft.loss + (1.0 - lambda) * hard.loss;
  out.dloss_dlogits =
      lambda * soft.dloss_dlogits + (1.0 - lambda) * hard.dloss_dlogits;
  return out;
}

// ---------------------------------------------------------------------------
// Shared training loop.

namespace {

struct TrainingItem {
  const Matrix *inputs = nullptr;               // student-side features
  Matrix targets;                               // frames x classes
  const std::vector<int32_t> *labels = nullptr;  // for reporting only
};

struct Evaluation {
  double objective = 0.0;  // per frame
  std::optional<double> fer;
};

Evaluation Evaluate(const Network &net, const std::vector<TrainingItem> &items,
                    const std::vector<size_t> &subset) {
  double loss = 0.0;
  int64_t frames = 0, errors = 0;
  bool all_labeled = !subset.empty();
  for (size_t idx : subset) {
    const TrainingItem &item = items[idx];
    const Matrix logits =
        ComputeLogits(net, SpliceFrames(*item.inputs, net.context()));
    loss += TargetCrossEntropy(item.targets, logits, 0.0, nullptr);
    frames += logits.rows();
    if (item.labels == nullptr) {
      all_labeled = false;
    } else if (all_labeled) {
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
          if (logits(r, c) > logits(r, best)) best = c;
        if (best != (*item.labels)[r]) ++errors;
      }
    }
  }
  Evaluation ev;
  ev.objective = frames > 0 ? loss / frames : 0.0;
  if (all_labeled && frames > 0) ev.fer = 100.0 * errors / frames;
  return ev;
}

TrainResult RunTraining(Network net, const std::vector<TrainingItem> &items,
                        const TsConfig &cfg) {
  cfg.Validate();
  TSADAPT_CHECK(!items.empty(), "training set is empty");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  const ContextWindow ctx = net.context();
  for (size_t i = 0; i < items.size(); ++i) {
    TSADAPT_CHECK(items[i].inputs->cols() * ctx.Width() == net.InputDim(),
                  "utterance " << i << " has feature dim "
                               << items[i].inputs->cols()
                               << " incompatible with network input dim "
                               << net.InputDim());
    TSADAPT_CHECK(items[i].targets.cols() == net.OutputDim(),
                  "utterance " << i << " targets have "
                               << items[i].targets.cols()
                               << " classes, network outputs "
                               << net.OutputDim());
  }

  // Seeded utterance-level split; a single utterance validates on itself.
  std::vector<size_t> all(items.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<size_t> train_idx = all, valid_idx;
  if (items.size() >= 2 && cfg.validation_fraction > 0.0) {
    std::vector<size_t> shuffled = all;
    Rng split_rng(DeriveSeed(cfg.seed, 0x5b117));
    Shuffle(&shuffled, &split_rng);
    size_t n_valid = static_cast<size_t>(
        std::lround(cfg.validation_fraction * static_cast<double>(items.size())));
    n_valid = std::clamp<size_t>(n_valid, 1, items.size() - 1);
    valid_idx.assign(shuffled.begin(), shuffled.begin() + n_valid);
    train_idx.assign(shuffled.begin() + n_valid, shuffled.end());
    std::sort(valid_idx.begin(), valid_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  } else {
    valid_idx = all;
  }

  LossReport report;
  {
    const Evaluation train0 = Evaluate(net, items, train_idx);
    const Evaluation valid0 = Evaluate(net, items, valid_idx);
    report.epochs.push_back(
        {0, train0.objective, valid0.objective, valid0.fer, elapsed()});
  }

  SgdOptimizer opt(cfg.learning_rate, cfg.momentum);
  const int batch = cfg.batch_frames;
  Matrix batch_inputs(batch, net.InputDim());
  Matrix batch_targets(batch, net.OutputDim());
  int stalled = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    opt.set_learning_rate(cfg.learning_rate *
                          std::pow(cfg.lr_decay, epoch - 1));
    std::vector<size_t> order = train_idx;
    Rng order_rng(DeriveSeed(cfg.seed, 0xe90c, static_cast<uint64_t>(epoch)));
    Shuffle(&order, &order_rng);

    double epoch_loss = 0.0;
    int64_t epoch_frames = 0;
    size_t u = 0;
    int pos = 0;
    int batch_index = 0;
    while (u < order.size()) {
      int filled = 0;
      while (filled < batch && u < order.size()) {
        const TrainingItem &item = items[order[u]];
        const int frames = static_cast<int>(item.inputs->rows());
        const int take = std::min(frames - pos, batch - filled);
        SpliceFrames(*item.inputs, ctx, pos, take, &batch_inputs, filled);
        batch_targets.middleRows(filled, take) =
            item.targets.middleRows(pos, take);
        filled += take;
        pos += take;
        if (pos == frames) {
          ++u;
          pos = 0;
        }
      }
      ForwardCache cache;
      const Matrix logits =
          filled == batch
              ? ComputeLogits(net, batch_inputs, &cache)
              : ComputeLogits(net, batch_inputs.topRows(filled), &cache);
      Matrix grad;
      const double loss = TargetCrossEntropy(
          filled == batch ? batch_targets : Matrix(batch_targets.topRows(filled)),
          logits, 1.0 / filled, &grad);
      TSADAPT_CHECK(std::isfinite(loss), "non-finite training objective in "
                                             << "epoch " << epoch << ", batch "
                                             << batch_index);
      opt.Step(&net, Backward(net, cache, grad));
      epoch_loss += loss;
      epoch_frames += filled;
      ++batch_index;
    }

    const Evaluation valid = Evaluate(net, items, valid_idx);
    TSADAPT_CHECK(std::isfinite(valid.objective),
                  "non-finite validation objective after epoch " << epoch);
    const double previous = report.epochs.back().validation_objective;
    report.epochs.push_back({epoch, epoch_loss / epoch_frames,
                             valid.objective, valid.fer, elapsed()});

    const double improvement =
        (previous - valid.objective) / std::max(std::abs(previous), 1e-12);
    stalled = improvement < cfg.tol ? stalled + 1 : 0;
    if (stalled >= cfg.patience) break;
  }
  return {std::move(net), std::move(report)};
}

void CheckNonEmpty(size_t n, const char *what) {
  TSADAPT_CHECK(n > 0, what << " is empty");
}

// ---------------------------------------------------------------------------
// Trainers.

const Network &StartingPoint(const Network &teacher, const Network *init) {
  if (init == nullptr) return teacher;
  TSADAPT_CHECK(init->InputDim() == teacher.InputDim() &&
                    init->OutputDim() == teacher.OutputDim() &&
                    init->context().k == teacher.context().k,
                "student initialisation does not match the teacher's shape");
  return *init;
}

}  // namespace

TrainResult TsAdapt(const Network &teacher, const ParallelData &corpus,
                    const TsConfig &cfg, const Network *init) {
  CheckNonEmpty(corpus.size(), "parallel corpus");
  std::vector<TrainingItem> items(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CheckAligned(corpus[i]);
    items[i].inputs = &corpus[i].target.values;
    items[i].targets = Forward(teacher, corpus[i].source).values();
    if (!corpus[i].target_labels.empty())
      items[i].labels = &corpus[i].target_labels;
  }
  return RunTraining(StartingPoint(teacher, init), items, cfg);
}

TrainResult TrainHard(const Network &init,
                      const std::vector<LabeledFeatures> &data,
                      const TsConfig &cfg) {
  CheckNonEmpty(data.size(), "labelled training set");
  std::vector<TrainingItem> items(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    TSADAPT_CHECK(static_cast<int>(data[i].labels.size()) ==
                      data[i].features.NumFrames(),
                  "utterance '" << data[i].id << "' has "
                                << data[i].labels.size() << " labels for "
                                << data[i].features.NumFrames() << " frames");
    items[i].inputs = &data[i].features.values;
    items[i].targets = OneHot(data[i].labels, init.OutputDim());
    items[i].labels = &data[i].labels;
  }
  return RunTraining(init, items, cfg);
}

std::vector<int32_t> PseudoLabels(const Network &teacher,
                                  const FeatureMatrix &features) {
  return Forward(teacher, features).Argmax();
}

TrainResult PseudoLabelAdapt(const Network &teacher,
                             const std::vector<FeatureMatrix> &targets,
                             const TsConfig &cfg, const Network *init) {
  CheckNonEmpty(targets.size(), "unlabelled target set");
  std::vector<TrainingItem> items(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) {
    items[i].inputs = &targets[i].values;
    items[i].targets =
        OneHot(PseudoLabels(teacher, targets[i]), teacher.OutputDim());
  }
  return RunTraining(StartingPoint(teacher, init), items, cfg);
}

TrainResult InterpolatedDistill(const Network &teacher,
                                const ParallelData &corpus, double lambda,
                                const TsConfig &cfg, const Network *init) {
  TSADAPT_CHECK(lambda >= 0.0 && lambda <= 1.0,
                "lambda must be in [0, 1], got " << lambda);
  CheckNonEmpty(corpus.size(), "parallel corpus");
  std::vector<TrainingItem> items(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CheckAligned(corpus[i]);
    TSADAPT_CHECK(!corpus[i].target_labels.empty(),
                  "interpolated distillation needs target labels; pair '"
                      << corpus[i].id << "' has none");
    const Matrix soft = Forward(teacher, corpus[i].source).values();
    const Matrix hard = OneHot(corpus[i].target_labels, teacher.OutputDim());
    items[i].inputs = &corpus[i].target.values;
    items[i].targets = lambda * soft + (1.0 - lambda) * hard;
    items[i].labels = &corpus[i].target_labels;
  }
  return RunTraining(StartingPoint(teacher, init), items, cfg);
}

Network CloneForTarget(const Network &teacher,
                       const std::vector<const Matrix *> &targets) {
  Network student = teacher;
  FitInputNormalization(targets, &student);
  return student;
}

// ---------------------------------------------------------------------------
// dataset.h helpers.

void CheckAligned(const FeaturePair &pair) {
  TSADAPT_CHECK(pair.source.NumFrames() == pair.target.NumFrames(),
                "pair '" << pair.id << "' has " << pair.source.NumFrames()
                         << " source frames but " << pair.target.NumFrames()
                         << " target frames");
  TSADAPT_CHECK(pair.source.NumFrames() >= 1,
                "pair '" << pair.id << "' has no frames");
  TSADAPT_CHECK(pair.target_labels.empty() ||
                    static_cast<int>(pair.target_labels.size()) ==
                        pair.target.NumFrames(),
                "pair '" << pair.id << "' has " << pair.target_labels.size()
                         << " labels for " << pair.target.NumFrames()
                         << " frames");
}

std::vector<LabeledFeatures> TargetSide(const ParallelData &data) {
  std::vector<LabeledFeatures> out;
  out.reserve(data.size());
  for (const FeaturePair &p : data)
    out.push_back({p.id, p.target, p.target_labels});
  return out;
}

std::vector<LabeledFeatures> SourceSide(const ParallelData &data) {
  std::vector<LabeledFeatures> out;
  out.reserve(data.size());
  for (const FeaturePair &p : data)
    out.push_back({p.id, p.source, p.target_labels});
  return out;
}

}  // namespace tsadapt
