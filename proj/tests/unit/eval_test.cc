// tests/unit/eval_test.cc

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

#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "tsadapt/eval.h"

namespace tsadapt {
namespace {

Matrix RandomMatrix(Rng *rng, int rows, int cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = scale * rng->Gaussian();
  return m;
}

std::vector<std::string> Lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

UtteranceScore Score(int64_t frames, int64_t errors, double snr) {
  UtteranceScore s;
  s.id = "u" + std::to_string(frames) + "-" + std::to_string(errors);
  s.frames = frames;
  s.errors = errors;
  s.snr_db = snr;
  return s;
}

TEST(FrameErrorRateTest, PerfectPosteriors) {
  Matrix logits = Matrix::Zero(4, 3);
  const std::vector<int32_t> labels = {2, 0, 1, 2};
  for (int f = 0; f < 4; ++f) logits(f, labels[f]) = 5.0;
  EXPECT_EQ(FrameErrorRate(PosteriorMatrix::FromLogits(logits), labels), 0.0);
}

TEST(FrameErrorRateTest, UniformPosteriorsUseTieRule) {
  const PosteriorMatrix p = PosteriorMatrix::FromLogits(Matrix::Zero(8, 4));
  const std::vector<int32_t> labels = {0, 1, 2, 3, 0, 0, 3, 1};
  EXPECT_DOUBLE_EQ(FrameErrorRate(p, labels), 100.0 * 5 / 8);
  EXPECT_EQ(FrameErrors(p, labels), 5);
  EXPECT_THROW(FrameErrorRate(p, {0, 1}), Error);
}

// Independent random labels: any model sits at chance, 1 - 1/20.
TEST(FrameErrorRateTest, ShuffledLabelsAreAtChance) {
  Rng rng(1);
  const Network net = InitNetwork({10, 16, 20}, Activation::kTanh, 2);
  LabeledFeatures u;
  u.features.values = RandomMatrix(&rng, 20000, 10);
  u.labels.resize(20000);
  for (auto &l : u.labels) l = static_cast<int32_t>(rng.UniformInt(20));
  const double fer = CorpusErrorRate(ScoreUtterances(net, {u}));
  EXPECT_NEAR(fer, 95.0, 1.0);
}

TEST(BucketBreakdownTest, SingleBucketMatchesOverall) {
  const BucketReport r =
      BucketBreakdown({Score(100, 10, 12.0), Score(50, 20, 7.0)});
  EXPECT_EQ(r.buckets[1].frames, 150);
  EXPECT_EQ(r.buckets[1].utterances, 2);
  EXPECT_DOUBLE_EQ(*r.buckets[1].ErrorRate(), r.overall_error);
  EXPECT_FALSE(r.buckets[0].ErrorRate().has_value());
  EXPECT_FALSE(r.buckets[2].ErrorRate().has_value());
  EXPECT_FALSE(r.buckets[3].ErrorRate().has_value());
}

TEST(BucketBreakdownTest, FrameWeightedAverage) {
  const BucketReport r =
      BucketBreakdown({Score(100, 10, 2.0), Score(300, 60, 25.0)});
  EXPECT_DOUBLE_EQ(*r.buckets[0].ErrorRate(), 10.0);
  EXPECT_DOUBLE_EQ(*r.buckets[2].ErrorRate(), 20.0);
  EXPECT_NEAR(r.bucket_average, 17.5, 1e-12);
  EXPECT_NEAR(r.overall_error, 17.5, 1e-12);
}

TEST(BucketBreakdownTest, SentinelsAreCountedSeparately) {
  Rng rng(3);
  std::vector<UtteranceScore> scores;
  int64_t total = 0, sentinel_frames = 0;
  for (int i = 0; i < 100; ++i) {
    const int64_t frames = 20 + static_cast<int64_t>(rng.UniformInt(30));
    const bool sentinel = i % 20 == 7;
    const double snr = sentinel ? kSnrSentinelDb : rng.Uniform(-5.0, 50.0);
    scores.push_back(Score(frames, frames / 3, snr));
    total += frames;
    if (sentinel) sentinel_frames += frames;
  }
  const BucketReport r = BucketBreakdown(scores);
  int64_t bucketed = 0;
  for (const BucketStats &b : r.buckets) bucketed += b.frames;
  EXPECT_EQ(r.sentinel.utterances, 5);
  EXPECT_EQ(r.sentinel.frames, sentinel_frames);
  EXPECT_EQ(bucketed, total - sentinel_frames);
  EXPECT_EQ(r.TotalFrames(), total);
}

TEST(BucketBreakdownTest, AverageEqualsOverallWithoutSentinels) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<UtteranceScore> scores;
    for (int i = 0; i < 30; ++i) {
      const int64_t frames = 1 + static_cast<int64_t>(rng.UniformInt(100));
      scores.push_back(Score(frames, static_cast<int64_t>(rng.UniformInt(frames + 1)),
                             rng.Uniform(-10.0, 60.0)));
    }
    const BucketReport r = BucketBreakdown(scores);
    EXPECT_NEAR(r.bucket_average, r.overall_error, 1e-9);
  }
  EXPECT_THROW(BucketBreakdown({}), Error);
}

TEST(BehavioralGapTest, IdentityAndShift) {
  Rng rng(5);
  const Network net = InitNetwork({4, 8, 5}, Activation::kTanh, 6);
  FeatureMatrix src;
  src.values = RandomMatrix(&rng, 30, 4);
  EXPECT_NEAR(BehavioralGap(net, src, net, src), 0.0, 1e-12);
  FeatureMatrix tgt = src;
  tgt.values.array() += 0.7;
  const double gap = BehavioralGap(net, src, net, tgt);
  EXPECT_GT(gap, 0.0);
  const Network other = InitNetwork({4, 8, 5}, Activation::kTanh, 7);
  EXPECT_GE(BehavioralGap(net, src, other, tgt), 0.0);
  tgt.values.conservativeResize(29, 4);
  EXPECT_THROW(BehavioralGap(net, src, net, tgt), Error);
}

TEST(BehavioralGapTest, CorpusGapIsFrameWeighted) {
  Rng rng(6);
  const Network a = InitNetwork({3, 4}, Activation::kNone, 1);
  const Network b = InitNetwork({3, 4}, Activation::kNone, 2);
  ParallelData data;
  double weighted = 0.0;
  int frames = 0;
  for (int i = 0; i < 4; ++i) {
    FeaturePair p;
    p.id = "p" + std::to_string(i);
    p.source.values = RandomMatrix(&rng, 5 + 10 * i, 3);
    p.target = p.source;
    weighted += BehavioralGap(a, p.source, b, p.target) * p.source.NumFrames();
    frames += p.source.NumFrames();
    data.push_back(p);
  }
  EXPECT_NEAR(BehavioralGap(a, b, data), weighted / frames, 1e-12);
}

EvalResult Result(const std::string &model, const std::string &corpus,
                  const std::string &teacher, const std::string &student,
                  double fer) {
  EvalResult r;
  r.model_id = model;
  r.corpus_id = corpus;
  r.teacher_data = teacher;
  r.student_data = student;
  r.fer = fer;
  r.frames = 1000;
  return r;
}

// Header and rule, then one line per row.
TEST(ExperimentTableTest, RowsAndColumns) {
  EXPECT_EQ(Lines(ExperimentTable({})).size(), 2u);
  EXPECT_EQ(Lines(ExperimentTable({Result("t", "clean", "clean", "-", 1.0)}))
                .size(),
            3u);

  std::vector<EvalResult> rs;
  const std::vector<std::array<std::string, 3>> rows = {
      {"teacher", "clean", "-"},
      {"multicond", "noisy", "-"},
      {"ts1x", "clean", "clean-noisy 1x"},
      {"ts4x", "clean", "clean-noisy 4x"}};
  double fer = 1.0;
  for (const auto &row : rows) {
    rs.push_back(Result(row[0], "clean", row[1], row[2], fer));
    rs.push_back(Result(row[0], "noisy", row[1], row[2], fer + 10.0));
    fer += 1.0;
  }
  const std::vector<std::string> lines = Lines(ExperimentTable(rs));
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_NE(lines[0].find("clean"), std::string::npos);
  EXPECT_NE(lines[0].find("noisy"), std::string::npos);
  // Sorted by (teacher data, student data).
  EXPECT_EQ(lines[2].rfind("clean", 0), 0u);
  EXPECT_NE(lines[2].find(" -"), std::string::npos);
  EXPECT_EQ(lines[5].rfind("noisy", 0), 0u);
}

TEST(EmitResultsTest, RoundTrip) {
  EvalResult a = Result("ts4x", "mixed", "clean", "clean-noisy 4x", 12.5);
  a.mean_kl = 0.125;
  a.buckets = BucketBreakdown({Score(100, 10, 2.0), Score(300, 60, 25.0),
                               Score(40, 4, kSnrSentinelDb)});
  const EvalResult b = Result("teacher", "clean", "clean", "-", 0.875);
  const std::vector<EvalResult> back = ParseResults(EmitResults({a, b}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  EXPECT_EQ(Lines(EmitResults({a, b})).size(), 2u);
  EXPECT_THROW(ParseResults("{not json"), Error);
}

TEST(BucketTableTest, ListsAllFourBuckets) {
  const BucketReport r = BucketBreakdown({Score(100, 10, 2.0)});
  const std::string table = BucketTable(r);
  for (int k = 0; k < kNumSnrBuckets; ++k)
    EXPECT_NE(table.find(std::string(SnrBucketName(static_cast<SnrBucket>(k)))),
              std::string::npos);
}

}  // namespace
}  // namespace tsadapt
