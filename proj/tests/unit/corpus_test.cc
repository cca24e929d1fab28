// tests/unit/corpus_test.cc

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

#include <array>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <tuple>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tsadapt/corpus.h"

namespace tsadapt {
namespace {

SynthSpec ShortSpec() {
  SynthSpec spec;
  spec.duration_s = 0.35;
  spec.edge_silence_s = 0.05;
  return spec;
}

class CorpusTest : public ::testing::Test {
 protected:
  void SetUp() override {
    clean_ = SynthCorpus(ShortSpec(), 12, 1, dir_ / "clean");
    noises_ = SynthNoiseSet({NoiseKind::kWhite, NoiseKind::kBrown}, 2.0, 16000,
                            2, dir_ / "noise");
  }

  testing::TempDir dir_;
  std::vector<UtteranceRecord> clean_;
  std::vector<NoiseSource> noises_;
};

void ExpectAligned(const ParallelManifest &m) {
  for (const ManifestPair &p : m.pairs) {
    EXPECT_EQ(ReadFeatureHeader(p.source.feature_path).NumFrames(), p.frames);
    EXPECT_EQ(ReadFeatureHeader(p.target.feature_path).NumFrames(), p.frames);
  }
}

TEST_F(CorpusTest, SynthCorpusSingleRecordHasLabels) {
  const auto one = SynthCorpus(ShortSpec(), 1, 5, dir_ / "one");
  ASSERT_EQ(one.size(), 1u);
  ASSERT_TRUE(one[0].HasLabels());
  const LabeledFeatures u = LoadUtterance(one[0]);
  EXPECT_EQ(static_cast<int>(u.labels.size()), u.features.NumFrames());
  EXPECT_EQ(u.features.Dim(), 80);
}

TEST_F(CorpusTest, SynthCorpusIsByteDeterministic) {
  const auto again = SynthCorpus(ShortSpec(), 12, 1, dir_ / "again");
  ASSERT_EQ(again.size(), clean_.size());
  for (size_t i = 0; i < clean_.size(); ++i) {
    EXPECT_EQ(again[i].id, clean_[i].id);
    EXPECT_EQ(testing::ReadBytes(again[i].feature_path),
              testing::ReadBytes(clean_[i].feature_path));
    EXPECT_EQ(testing::ReadBytes(again[i].wave_path),
              testing::ReadBytes(clean_[i].wave_path));
  }
}

TEST_F(CorpusTest, SavedWaveReproducesSavedFeatures) {
  const Waveform w = ReadWav(clean_[0].wave_path);
  FeatureMatrix f = ComputeFeatures(w, FeatureConfig());
  RoundToFloat(&f);
  EXPECT_EQ(f.values, ReadFeatures(clean_[0].feature_path).values);
}

TEST(SynthCorpusHistogramTest, NoClassBelowOnePercent) {
  testing::TempDir dir;
  SynthSpec spec = ShortSpec();
  const auto records = SynthCorpus(spec, 2000, 9, dir.path());
  std::array<int64_t, 20> counts{};
  int64_t total = 0;
  for (const UtteranceRecord &r : records) {
    for (int32_t l : ReadLabels(r.label_path)) {
      ++counts.at(l);
      ++total;
    }
  }
  for (int c = 0; c < 20; ++c)
    EXPECT_GE(static_cast<double>(counts[c]) / total, 0.01) << "class " << c;
}

TEST_F(CorpusTest, FixedSnrRangeRecordsExactValue) {
  const ParallelManifest m =
      BuildNoisyParallel(clean_, noises_, 10.0, 10.0, 3, dir_ / "fixed");
  ASSERT_EQ(m.size(), clean_.size());
  for (const NoiseDraw &d : NoiseDraws(m)) EXPECT_EQ(d.snr_db, 10.0);
  ExpectAligned(m);
}

// Oracle: the draws themselves, counted per 5 dB sub-band.
TEST(NoisyParallelHistogramTest, SnrDrawsAreUniform) {
  testing::TempDir dir;
  SynthSpec spec = ShortSpec();
  spec.duration_s = 0.2;
  spec.edge_silence_s = 0.0;
  const auto clean = SynthCorpus(spec, 600, 4, dir / "clean");
  const auto noises =
      SynthNoiseSet({NoiseKind::kWhite}, 1.0, 16000, 5, dir / "noise");
  const ParallelManifest m =
      BuildNoisyParallel(clean, noises, 5.0, 20.0, 6, dir / "noisy");
  std::array<int, 3> bands{};
  const auto draws = NoiseDraws(m);
  ASSERT_EQ(draws.size(), 600u);
  for (const NoiseDraw &d : draws) {
    ASSERT_GE(d.snr_db, 5.0);
    ASSERT_LE(d.snr_db, 20.0);
    ++bands[std::min(2, static_cast<int>((d.snr_db - 5.0) / 5.0))];
  }
  for (int b : bands) EXPECT_NEAR(b / 600.0, 1.0 / 3.0, 0.07);
}

TEST_F(CorpusTest, NoisyGenerationIsDeterministic) {
  const ParallelManifest a =
      BuildNoisyParallel(clean_, noises_, 5.0, 20.0, 7, dir_ / "a");
  const ParallelManifest b =
      BuildNoisyParallel(clean_, noises_, 5.0, 20.0, 7, dir_ / "b");
  const auto da = NoiseDraws(a), db = NoiseDraws(b);
  ASSERT_EQ(da.size(), db.size());
  for (size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i].ToString(), db[i].ToString());
  for (size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(testing::ReadBytes(a.pairs[i].target.feature_path),
              testing::ReadBytes(b.pairs[i].target.feature_path));
}

TEST_F(CorpusTest, RejectsBadNoisyArguments) {
  EXPECT_THROW(BuildNoisyParallel(clean_, noises_, 20.0, 5.0, 1, dir_ / "x"),
               Error);
  EXPECT_THROW(BuildNoisyParallel({}, noises_, 5.0, 20.0, 1, dir_ / "x"), Error);
  EXPECT_THROW(BuildNoisyParallel(clean_, {}, 5.0, 20.0, 1, dir_ / "x"), Error);
}

TEST_F(CorpusTest, WarpedZeroAlphaIsIdentity) {
  const ParallelManifest m = BuildWarpedParallel(clean_, 0.0, 1, dir_ / "w0");
  ASSERT_EQ(m.size(), clean_.size());
  for (const ManifestPair &p : m.pairs)
    EXPECT_EQ(ReadFeatures(p.source.feature_path),
              ReadFeatures(p.target.feature_path));
}

TEST_F(CorpusTest, WarpedPairsAreAligned) {
  for (double alpha : {0.1, 0.99}) {
    const ParallelManifest m = BuildWarpedParallel(
        clean_, alpha, 1, dir_ / ("w" + std::to_string(alpha)));
    EXPECT_EQ(m.size(), clean_.size());
    ExpectAligned(m);
  }
  EXPECT_THROW(BuildWarpedParallel(clean_, 1.0, 1, dir_ / "bad"), Error);
}

TEST_F(CorpusTest, FilterVacuousThresholdsAndIdempotence) {
  const ParallelManifest m = BuildWarpedParallel(clean_, 0.1, 1, dir_ / "w");
  const Network clf = InitNetwork({80, 2}, Activation::kNone, 3);
  const ParallelManifest all =
      FilterByDomainClassifier(m, clf, 1, 0.0, ManifestSide::kTarget);
  EXPECT_EQ(all.pairs, m.pairs);
  EXPECT_EQ(all.Require("filter.retained_fraction"), "1");
  const ParallelManifest none =
      FilterByDomainClassifier(m, clf, 1, 1.0, ManifestSide::kTarget);
  EXPECT_TRUE(none.pairs.empty());

  const ParallelManifest half =
      FilterByDomainClassifier(m, clf, 1, 0.5, ManifestSide::kTarget);
  EXPECT_LE(half.size(), m.size());
  if (!half.pairs.empty()) {
    const ParallelManifest twice =
        FilterByDomainClassifier(half, clf, 1, 0.5, ManifestSide::kTarget);
    EXPECT_EQ(twice.pairs, half.pairs);
  }
}

TEST_F(CorpusTest, FilterRejectsDimensionMismatch) {
  const ParallelManifest m = BuildWarpedParallel(clean_, 0.1, 1, dir_ / "w");
  const Network clf = InitNetwork({40, 2}, Activation::kNone, 3);
  EXPECT_THROW(FilterByDomainClassifier(m, clf, 1, 0.5, ManifestSide::kSource),
               Error);
  const Network ok = InitNetwork({80, 2}, Activation::kNone, 3);
  EXPECT_THROW(FilterByDomainClassifier(m, ok, 2, 0.5, ManifestSide::kSource),
               Error);
}

TEST_F(CorpusTest, ScaleCorpusCountsAndUniqueness) {
  const ParallelManifest m =
      BuildNoisyParallel(clean_, noises_, 5.0, 20.0, 3, dir_ / "n");
  const ParallelManifest same = ScaleCorpus(m, 1, 4, dir_ / "s1");
  EXPECT_EQ(same.pairs, m.pairs);

  const ParallelManifest four = ScaleCorpus(m, 4, 4, dir_ / "s4");
  EXPECT_EQ(four.size(), 4 * m.size());
  ExpectAligned(four);

  const ParallelManifest eight = ScaleCorpus(m, 8, 5, dir_ / "s8");
  EXPECT_EQ(eight.size(), 8 * m.size());
  std::set<std::tuple<std::string, std::string, size_t, double>> seen;
  for (const NoiseDraw &d : NoiseDraws(eight))
    EXPECT_TRUE(seen.emplace(d.source_id, d.noise_id, d.offset, d.snr_db).second)
        << d.ToString();
  EXPECT_EQ(seen.size(), eight.size());
}

TEST_F(CorpusTest, ScaleCorpusNeedsGenerationMetadata) {
  const ParallelManifest plain = CorpusManifest(clean_);
  EXPECT_THROW(ScaleCorpus(plain, 2, 1, dir_ / "x"), Error);
}

TEST_F(CorpusTest, ManifestRoundTrip) {
  const ParallelManifest m =
      BuildNoisyParallel(clean_, noises_, 5.0, 20.0, 3, dir_ / "n");
  WriteManifest(dir_ / "m.tsv", m);
  EXPECT_EQ(ReadManifest(dir_ / "m.tsv"), m);
  const ParallelManifest c = CorpusManifest(clean_);
  WriteManifest(dir_ / "c.tsv", c);
  EXPECT_EQ(ReadManifest(dir_ / "c.tsv"), c);
}

TEST_F(CorpusTest, ReadManifestChecksFrameCounts) {
  ParallelManifest m = CorpusManifest(clean_);
  m.pairs[2].frames += 1;
  WriteManifest(dir_ / "bad.tsv", m);
  EXPECT_THROW(ReadManifest(dir_ / "bad.tsv"), Error);
}

TEST_F(CorpusTest, LoadParallelDataAligns) {
  const ParallelManifest m =
      BuildNoisyParallel(clean_, noises_, 5.0, 20.0, 3, dir_ / "n");
  const ParallelData data = LoadParallelData(m);
  ASSERT_EQ(data.size(), m.size());
  for (const FeaturePair &p : data) {
    EXPECT_EQ(p.source.NumFrames(), p.target.NumFrames());
    EXPECT_EQ(static_cast<int>(p.target_labels.size()), p.target.NumFrames());
  }
}

TEST(NoiseDrawTest, TextRoundTrip) {
  NoiseDraw d{"t1", "s1", "white", 1234, 12.345678901234567};
  const NoiseDraw back = NoiseDraw::Parse(d.ToString());
  EXPECT_EQ(back.ToString(), d.ToString());
  EXPECT_EQ(back.snr_db, d.snr_db);
  EXPECT_THROW(NoiseDraw::Parse("garbage"), Error);
}

TEST(LabelsTest, RoundTrip) {
  testing::TempDir dir;
  const std::vector<int32_t> labels = {0, 5, 19, 3, 3};
  WriteLabels(dir / "l.lab", labels);
  EXPECT_EQ(ReadLabels(dir / "l.lab"), labels);
}

TEST(ParallelForTest, RunsEveryIndexAndRethrowsFirstError) {
  std::vector<int> hits(100, 0);
  ParallelFor(100, 4, [&](size_t i) { hits[i] += 1; });
  EXPECT_EQ(hits, std::vector<int>(100, 1));
  try {
    ParallelFor(10, 3, [](size_t i) {
      if (i == 3 || i == 7) throw Error("task " + std::to_string(i));
    });
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_STREQ(e.what(), "task 3");
  }
}

}  // namespace
}  // namespace tsadapt
