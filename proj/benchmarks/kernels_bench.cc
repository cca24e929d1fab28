// benchmarks/kernels_bench.cc

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

// Microbenchmarks of the per-utterance hot paths.

#include <benchmark/benchmark.h>

#include "tsadapt/common.h"
#include "tsadapt/distill.h"
#include "tsadapt/features.h"
#include "tsadapt/nnet.h"
#include "tsadapt/signal.h"

namespace tsadapt {
namespace {

Waveform NoiseWave(double seconds, uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(static_cast<size_t>(seconds * w.sample_rate));
  for (double &s : w.samples) s = 0.1 * rng.Gaussian();
  return w;
}

Matrix RandomMatrix(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Gaussian();
  return m;
}

void BM_ComputeFeatures(benchmark::State &state) {
  const Waveform wave = NoiseWave(state.range(0), 1);
  const FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ComputeFeatures(wave, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeFeatures)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_WarpedFeatures(benchmark::State &state) {
  const Waveform wave = NoiseWave(1.0, 2);
  const FeatureConfig cfg;
  const WarpConfig warp{0.1};
  for (auto _ : state)
    benchmark::DoNotOptimize(ComputeWarpedFeatures(wave, cfg, warp));
}
BENCHMARK(BM_WarpedFeatures)->Unit(benchmark::kMillisecond);

void BM_MixAtSnr(benchmark::State &state) {
  const Waveform clean = NoiseWave(1.0, 3);
  const Waveform noise = NoiseWave(5.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(MixAtSnr(clean, noise, 10.0, 1234));
}
BENCHMARK(BM_MixAtSnr);

void BM_Forward(benchmark::State &state) {
  const int hidden = static_cast<int>(state.range(0));
  const int k = 3, dim = 23;
  const Network net =
      InitNetwork({dim * (2 * k + 1), hidden, hidden, 20}, Activation::kTanh, 5,
                  ContextWindow{k});
  FeatureMatrix f;
  f.values = RandomMatrix(100, dim, 6);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(net, f));
  state.SetItemsProcessed(state.iterations() * f.values.rows());
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State &state) {
  const int k = 3, dim = 23;
  const Network net = InitNetwork({dim * (2 * k + 1), 128, 128, 20},
                                  Activation::kTanh, 7, ContextWindow{k});
  const Matrix inputs = RandomMatrix(100, dim * (2 * k + 1), 8);
  const PosteriorMatrix teacher = PosteriorMatrix::FromLogits(RandomMatrix(100, 20, 9));
  for (auto _ : state) {
    ForwardCache cache;
    const Matrix logits = ComputeLogits(net, inputs, &cache);
    const LossAndGradient lg = SoftCeLoss(teacher, logits);
    benchmark::DoNotOptimize(Backward(net, cache, lg.dloss_dlogits));
  }
  state.SetItemsProcessed(state.iterations() * inputs.rows());
}
BENCHMARK(BM_ForwardBackward);

void BM_KlDivergence(benchmark::State &state) {
  const PosteriorMatrix t = PosteriorMatrix::FromLogits(RandomMatrix(1000, 20, 10));
  const PosteriorMatrix s = PosteriorMatrix::FromLogits(RandomMatrix(1000, 20, 11));
  for (auto _ : state) benchmark::DoNotOptimize(KlDivergence(t, s));
}
BENCHMARK(BM_KlDivergence);

}  // namespace
}  // namespace tsadapt

BENCHMARK_MAIN();
