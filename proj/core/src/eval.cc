// core/src/eval.cc

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

#include "tsadapt/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include "tsadapt/corpus.h"

namespace tsadapt {

int64_t FrameErrors(const PosteriorMatrix &posteriors,
                    const std::vector<int32_t> &labels) {
  TSADAPT_CHECK(static_cast<int>(labels.size()) == posteriors.NumFrames(),
                labels.size() << " labels for " << posteriors.NumFrames()
                              << " posterior frames");
  const std::vector<int32_t> best = posteriors.Argmax();
  int64_t errors = 0;
  for (size_t f = 0; f < labels.size(); ++f)
    if (best[f] != labels[f]) ++errors;
  return errors;
}

double FrameErrorRate(const PosteriorMatrix &posteriors,
                      const std::vector<int32_t> &labels) {
  TSADAPT_CHECK(!labels.empty(), "frame error rate of zero frames");
  return 100.0 * static_cast<double>(FrameErrors(posteriors, labels)) /
         static_cast<double>(labels.size());
}

std::vector<UtteranceScore> ScoreUtterances(
    const Network &net, const std::vector<LabeledFeatures> &data,
    const std::vector<double> &snrs, int jobs) {
  TSADAPT_CHECK(snrs.empty() || snrs.size() == data.size(),
                snrs.size() << " SNR values for " << data.size()
                            << " utterances");
  std::vector<UtteranceScore> out(data.size());
  ParallelFor(data.size(), jobs, [&](size_t i) {
    TSADAPT_CHECK(data[i].HasLabels(),
                  "utterance '" << data[i].id << "' has no labels to score");
    out[i].id = data[i].id;
    out[i].frames = data[i].features.NumFrames();
    out[i].errors = FrameErrors(Forward(net, data[i].features), data[i].labels);
    out[i].snr_db = snrs.empty() ? 0.0 : snrs[i];
  });
  return out;
}

double CorpusErrorRate(const std::vector<UtteranceScore> &scores) {
  int64_t frames = 0, errors = 0;
  for (const UtteranceScore &s : scores) {
    frames += s.frames;
    errors += s.errors;
  }
  TSADAPT_CHECK(frames > 0, "error rate of zero frames");
  return 100.0 * static_cast<double>(errors) / static_cast<double>(frames);
}

std::optional<double> BucketStats::ErrorRate() const {
  if (frames == 0) return std::nullopt;
  return 100.0 * static_cast<double>(errors) / static_cast<double>(frames);
}

int64_t BucketReport::TotalFrames() const {
  int64_t n = sentinel.frames;
  for (const BucketStats &b : buckets) n += b.frames;
  return n;
}

BucketReport BucketBreakdown(const std::vector<UtteranceScore> &scores) {
  TSADAPT_CHECK(!scores.empty(), "bucket breakdown of an empty result list");
  BucketReport report;
  int64_t frames = 0, errors = 0;
  for (const UtteranceScore &s : scores) {
    TSADAPT_CHECK(s.frames >= 0 && s.errors >= 0 && s.errors <= s.frames,
                  "utterance '" << s.id << "' has " << s.errors << " errors in "
                                << s.frames << " frames");
    BucketStats &b =
        IsSnrSentinel(s.snr_db)
            ? report.sentinel
            : report.buckets[static_cast<size_t>(SnrBucketFor(s.snr_db))];
    b.frames += s.frames;
    b.errors += s.errors;
    b.utterances += 1;
    frames += s.frames;
    errors += s.errors;
  }
  TSADAPT_CHECK(frames > 0, "bucket breakdown of zero frames");
  report.overall_error = 100.0 * static_cast<double>(errors) / frames;
  double weighted = 0.0;
  int64_t bucket_frames = 0;
  for (const BucketStats &b : report.buckets) {
    if (b.frames == 0) continue;
    weighted += *b.ErrorRate() * static_cast<double>(b.frames);
    bucket_frames += b.frames;
  }
  report.bucket_average = bucket_frames > 0 ? weighted / bucket_frames : 0.0;
  return report;
}

double BehavioralGap(const Network &teacher, const FeatureMatrix &source,
                     const Network &student, const FeatureMatrix &target) {
  TSADAPT_CHECK(source.NumFrames() == target.NumFrames(),
                "behavioural gap needs aligned frames, got "
                    << source.NumFrames() << " and " << target.NumFrames());
  TSADAPT_CHECK(source.NumFrames() > 0, "behavioural gap of zero frames");
  const PosteriorMatrix t = Forward(teacher, source);
  const PosteriorMatrix s = Forward(student, target);
  TSADAPT_CHECK(t.NumClasses() == s.NumClasses(),
                "teacher has " << t.NumClasses() << " classes, student "
                               << s.NumClasses());
  const Matrix &pt = t.values();
  const Matrix &ps = s.values();
  double kl = 0.0;
  for (Eigen::Index r = 0; r < pt.rows(); ++r)
    for (Eigen::Index c = 0; c < pt.cols(); ++c)
      kl += pt(r, c) * (std::log(pt(r, c)) - std::log(ps(r, c)));
  return kl / static_cast<double>(pt.rows());
}

double BehavioralGap(const Network &teacher, const Network &student,
                     const ParallelData &data, int jobs) {
  TSADAPT_CHECK(!data.empty(), "behavioural gap of an empty corpus");
  std::vector<double> sums(data.size());
  ParallelFor(data.size(), jobs, [&](size_t i) {
    sums[i] = BehavioralGap(teacher, data[i].source, student, data[i].target) *
              data[i].source.NumFrames();
  });
  double total = 0.0;
  int64_t frames = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    total += sums[i];
    frames += data[i].source.NumFrames();
  }
  return total / static_cast<double>(frames);
}

// ---------------------------------------------------------------------------
// Emission.

namespace {

using Json = nlohmann::ordered_json;

Json StatsToJson(const BucketStats &b) {
  return Json{{"frames", b.frames}, {"errors", b.errors},
              {"utterances", b.utterances}};
}

BucketStats StatsFromJson(const nlohmann::json &j) {
  BucketStats b;
  j.at("frames").get_to(b.frames);
  j.at("errors").get_to(b.errors);
  j.at("utterances").get_to(b.utterances);
  return b;
}

std::string Fixed(double x, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string FormatRows(const std::vector<std::vector<std::string>> &rows) {
  std::vector<size_t> width;
  for (const auto &row : rows)
    for (size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::ostringstream out;
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out << "  ";
      const std::string &cell = rows[r][c];
      // Text columns left aligned, numbers right aligned.
      if (c < 2) {
        out << cell << std::string(width[c] - cell.size(), ' ');
      } else {
        out << std::string(width[c] - cell.size(), ' ') << cell;
      }
    }
    out << '\n';
    if (r == 0) {
      size_t total = 0;
      for (size_t w : width) total += w;
      total += 2 * (width.empty() ? 0 : width.size() - 1);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string EmitResults(const std::vector<EvalResult> &results) {
  std::string out;
  for (const EvalResult &r : results) {
    Json j;
    j["model_id"] = r.model_id;
    j["corpus_id"] = r.corpus_id;
    j["teacher_data"] = r.teacher_data;
    j["student_data"] = r.student_data;
    j["fer"] = r.fer;
    j["frames"] = r.frames;
    j["mean_kl"] = r.mean_kl ? Json(*r.mean_kl) : Json(nullptr);
    if (r.buckets) {
      Json b;
      Json arr = Json::array();
      for (int k = 0; k < kNumSnrBuckets; ++k) {
        Json e = StatsToJson(r.buckets->buckets[k]);
        e["bucket"] = std::string(SnrBucketName(static_cast<SnrBucket>(k)));
        arr.push_back(e);
      }
      b["buckets"] = arr;
      b["sentinel"] = StatsToJson(r.buckets->sentinel);
      b["overall_error"] = r.buckets->overall_error;
      b["bucket_average"] = r.buckets->bucket_average;
      j["buckets"] = b;
    } else {
      j["buckets"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<EvalResult> ParseResults(const std::string &text) {
  std::vector<EvalResult> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      EvalResult r;
      j.at("model_id").get_to(r.model_id);
      j.at("corpus_id").get_to(r.corpus_id);
      j.at("teacher_data").get_to(r.teacher_data);
      j.at("student_data").get_to(r.student_data);
      j.at("fer").get_to(r.fer);
      j.at("frames").get_to(r.frames);
      if (j.contains("mean_kl") && !j.at("mean_kl").is_null())
        r.mean_kl = j.at("mean_kl").get<double>();
      if (j.contains("buckets") && !j.at("buckets").is_null()) {
        const nlohmann::json &b = j.at("buckets");
        BucketReport report;
        const nlohmann::json &arr = b.at("buckets");
        TSADAPT_CHECK(arr.is_array() && arr.size() == kNumSnrBuckets,
                      "expected " << kNumSnrBuckets << " buckets");
        for (int k = 0; k < kNumSnrBuckets; ++k)
          report.buckets[k] = StatsFromJson(arr.at(k));
        report.sentinel = StatsFromJson(b.at("sentinel"));
        b.at("overall_error").get_to(report.overall_error);
        b.at("bucket_average").get_to(report.bucket_average);
        r.buckets = report;
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception &e) {
      throw Error(Msg() << "result line " << line_no << " is malformed: "
                        << e.what());
    } catch (const Error &e) {
      throw Error(Msg() << "result line " << line_no << ": " << e.what());
    }
  }
  return out;
}

std::string ExperimentTable(const std::vector<EvalResult> &results) {
  std::vector<std::string> corpora;
  for (const EvalResult &r : results)
    if (std::find(corpora.begin(), corpora.end(), r.corpus_id) == corpora.end())
      corpora.push_back(r.corpus_id);
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>>
      rows;
  for (const EvalResult &r : results)
    rows[{r.teacher_data, r.student_data}][r.corpus_id] = r.fer;

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"teacher data", "student data"};
  for (const std::string &c : corpora) header.push_back(c);
  cells.push_back(header);
  for (const auto &[key, errs] : rows) {
    std::vector<std::string> row = {key.first, key.second};
    for (const std::string &c : corpora) {
      auto it = errs.find(c);
      row.push_back(it == errs.end() ? "-" : Fixed(it->second));
    }
    cells.push_back(row);
  }
  return FormatRows(cells);
}

std::string BucketTable(const BucketReport &report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"snr bucket", "utterances", "frames", "error %"});
  for (int k = 0; k < kNumSnrBuckets; ++k) {
    const BucketStats &b = report.buckets[k];
    const std::optional<double> e = b.ErrorRate();
    cells.push_back({std::string(SnrBucketName(static_cast<SnrBucket>(k))),
                     std::to_string(b.utterances), std::to_string(b.frames),
                     e ? Fixed(*e) : "-"});
  }
  const std::optional<double> se = report.sentinel.ErrorRate();
  cells.push_back({"no estimate", std::to_string(report.sentinel.utterances),
                   std::to_string(report.sentinel.frames), se ? Fixed(*se) : "-"});
  cells.push_back({"bucket average", "", "", Fixed(report.bucket_average)});
  cells.push_back({"overall", "", std::to_string(report.TotalFrames()),
                   Fixed(report.overall_error)});
  return FormatRows(cells);
}

}  // namespace tsadapt
