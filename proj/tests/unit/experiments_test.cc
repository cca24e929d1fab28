// tests/unit/experiments_test.cc

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
#include <array>

#include <gtest/gtest.h>

#include "tsadapt/experiments.h"

namespace tsadapt {
namespace {

UtteranceScore Score(int64_t frames, int64_t errors, double snr) {
  UtteranceScore s;
  s.frames = frames;
  s.errors = errors;
  s.snr_db = snr;
  return s;
}

// Per-bucket (frames, errors) for the mixed corpus, one utterance per bucket.
BucketReport Buckets(const std::array<int64_t, 4> &errors_per_100) {
  const double snrs[4] = {2.0, 10.0, 25.0, 45.0};
  std::vector<UtteranceScore> scores;
  for (int b = 0; b < 4; ++b) scores.push_back(Score(100, errors_per_100[b], snrs[b]));
  return BucketBreakdown(scores);
}

void Add(SeedReport *r, const std::string &model, const std::string &corpus,
         double fer, std::optional<BucketReport> buckets = std::nullopt) {
  EvalResult e;
  e.model_id = model;
  e.corpus_id = corpus;
  e.teacher_data = "clean";
  e.student_data = "-";
  e.fer = fer;
  e.frames = 1000;
  e.buckets = buckets;
  r->results.push_back(e);
}

SeedReport NoisyReport(uint64_t seed, double shift) {
  SeedReport r;
  r.seed = seed;
  Add(&r, "teacher", "clean", 1.0 + shift);
  Add(&r, "teacher", "noisy", 30.0 + shift);
  Add(&r, "teacher", "heldout", 30.0);
  Add(&r, "teacher", "mixed", 20.0, Buckets({60, 25, 6, 2}));
  Add(&r, "multicond", "clean", 3.0);
  Add(&r, "multicond", "noisy", 3.0);
  Add(&r, "ts1x", "clean", 2.0);
  Add(&r, "ts1x", "noisy", 2.5);
  Add(&r, "ts1x", "heldout", 19.0);
  Add(&r, "ts4x", "clean", 1.5);
  Add(&r, "ts4x", "noisy", 2.0);
  Add(&r, "ts4x", "heldout", 18.0);
  Add(&r, "ts4x", "mixed", 2.0, Buckets({6, 2, 1, 2}));
  Add(&r, "pseudo", "noisy", 30.0);
  r.metrics["gap.clone"] = 3.0;
  r.metrics["gap.ts4x"] = 0.02;
  r.metrics["endpoint.ts"] = 0.5;
  r.metrics["endpoint.lambda1"] = 0.5;
  r.metrics["endpoint.hard"] = 0.25;
  r.metrics["endpoint.lambda0"] = 0.25;
  return r;
}

SeedReport ChildrenReport(uint64_t seed) {
  SeedReport r;
  r.seed = seed;
  Add(&r, "teacher", "adult", 1.0);
  Add(&r, "teacher", "child", 40.0);
  Add(&r, "ts-warped", "child", 2.0);
  r.metrics["filter.retained_fraction"] = 0.31;
  r.metrics["filter.true_fraction"] = 0.30;
  r.metrics["classifier.accuracy"] = 97.0;
  return r;
}

const TrendCheck &Find(const std::vector<TrendCheck> &checks,
                       const std::string &id) {
  for (const TrendCheck &c : checks)
    if (c.id == id) return c;
  throw Error("no check " + id);
}

TEST(SuiteConfigTest, JsonRoundTripAndValidation) {
  SuiteConfig cfg;
  cfg.train_utterances = 123;
  cfg.hidden = {64, 32, 16};
  cfg.warp_alpha = 0.2;
  const SuiteConfig back = SuiteConfig::FromJson(cfg.ToJson());
  EXPECT_EQ(back.ToJson(), cfg.ToJson());
  EXPECT_NO_THROW(cfg.Validate());
  cfg.scale_factor = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SuiteConfig();
  cfg.warp_alpha = 1.0;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(ScenarioTest, NamesRoundTrip) {
  for (Scenario s : {Scenario::kNoisy, Scenario::kMismatch, Scenario::kChildren})
    EXPECT_EQ(ParseScenario(ScenarioName(s)), s);
  EXPECT_THROW(ParseScenario("chime"), Error);
}

TEST(AverageResultsTest, MeansAndPooledBuckets) {
  const std::vector<SeedReport> reports = {NoisyReport(1, 0.0), NoisyReport(2, 1.0)};
  const std::vector<EvalResult> avg = AverageResults(reports);
  EXPECT_DOUBLE_EQ(FindFer(avg, "teacher", "clean"), 1.5);
  EXPECT_DOUBLE_EQ(FindFer(avg, "teacher", "noisy"), 30.5);
  const EvalResult &mixed = FindResult(avg, "teacher", "mixed");
  ASSERT_TRUE(mixed.buckets.has_value());
  EXPECT_EQ(mixed.buckets->buckets[0].frames, 200);
  EXPECT_EQ(mixed.buckets->buckets[0].errors, 120);
  EXPECT_DOUBLE_EQ(*MeanBucketError(reports, "teacher", "mixed", 0), 60.0);
  EXPECT_DOUBLE_EQ(MeanMetric(reports, "gap.clone"), 3.0);
  EXPECT_THROW(FindFer(avg, "teacher", "nowhere"), Error);
}

TEST(NoisyTrendsTest, AllPassOnThreeGoodSeeds) {
  const std::vector<SeedReport> reports = {NoisyReport(1, 0.0), NoisyReport(2, 0.0),
                                           NoisyReport(3, 0.0)};
  for (const TrendCheck &c : CheckNoisyTrends(reports))
    EXPECT_EQ(c.status, CheckStatus::kPass) << c.id << ": " << c.detail;
  EXPECT_EQ(CheckMismatchTrends(reports).at(0).status, CheckStatus::kPass);
}

TEST(NoisyTrendsTest, SingleSeedIsInsufficientForTrends) {
  const auto checks = CheckNoisyTrends({NoisyReport(1, 0.0)});
  EXPECT_EQ(Find(checks, "A1.teacher").status, CheckStatus::kInsufficientSeeds);
  EXPECT_EQ(Find(checks, "A2.buckets").status, CheckStatus::kInsufficientSeeds);
  EXPECT_EQ(Find(checks, "A5.endpoints").status, CheckStatus::kPass);
}

TEST(NoisyTrendsTest, ViolationsFailAndSoftOnesAreFindings) {
  std::vector<SeedReport> reports;
  for (uint64_t s = 1; s <= 3; ++s) {
    SeedReport r = NoisyReport(s, 0.0);
    for (EvalResult &e : r.results) {
      if (e.model_id == "multicond") e.fer = 1.0;
      if (e.model_id == "pseudo") e.fer = 1.0;
    }
    r.metrics["endpoint.lambda1"] = 0.5 + 1e-6;
    reports.push_back(r);
  }
  const auto checks = CheckNoisyTrends(reports);
  EXPECT_EQ(Find(checks, "A1.student-vs-multicond").status, CheckStatus::kFail);
  EXPECT_EQ(Find(checks, "A5.pseudo").status, CheckStatus::kFinding);
  EXPECT_TRUE(Find(checks, "A5.pseudo").soft);
  EXPECT_EQ(Find(checks, "A5.endpoints").status, CheckStatus::kFail);
  EXPECT_EQ(Find(checks, "A1.teacher").status, CheckStatus::kPass);
}

TEST(NoisyTrendsTest, BucketLossBelowThirtyFiveDbFails) {
  std::vector<SeedReport> reports;
  for (uint64_t s = 1; s <= 3; ++s) {
    SeedReport r = NoisyReport(s, 0.0);
    for (EvalResult &e : r.results)
      if (e.model_id == "ts4x" && e.corpus_id == "mixed")
        e.buckets = Buckets({6, 2, 9, 50});
    reports.push_back(r);
  }
  EXPECT_EQ(Find(CheckNoisyTrends(reports), "A2.buckets").status,
            CheckStatus::kFail);
}

TEST(ChildrenTrendsTest, PassAndFilterTolerance) {
  std::vector<SeedReport> reports = {ChildrenReport(1), ChildrenReport(2),
                                     ChildrenReport(3)};
  for (const TrendCheck &c : CheckChildrenTrends(reports))
    EXPECT_EQ(c.status, CheckStatus::kPass) << c.id;
  reports[1].metrics["filter.retained_fraction"] = 0.36;
  EXPECT_EQ(Find(CheckChildrenTrends(reports), "A4.filter").status,
            CheckStatus::kFail);
}

// A status line and an indented detail line per check.
TEST(ChecksTextTest, TwoLinesPerCheck) {
  const auto checks = CheckChildrenTrends({ChildrenReport(1)});
  const std::string text = ChecksText(checks);
  EXPECT_EQ(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')),
            2 * checks.size());
  EXPECT_NE(text.find(CheckStatusName(CheckStatus::kInsufficientSeeds)),
            std::string::npos);
}

}  // namespace
}  // namespace tsadapt
