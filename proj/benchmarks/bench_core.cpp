// Copyright 2026 The crisisaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "crisisaug/backends.hpp"
#include "crisisaug/fusion_models.hpp"
#include "crisisaug/image_augmentation.hpp"
#include "crisisaug/quality_metrics.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/training_eval.hpp"

namespace {

using namespace crisisaug;

std::vector<std::string> tokens(Rng& rng, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(rng.below(20)));
  return out;
}

void BM_RougeL(benchmark::State& state) {
  Rng rng(1);
  const auto a = tokens(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = tokens(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(64)->Arg(256);

void BM_WeightedF1(benchmark::State& state) {
  Rng rng(2);
  std::vector<std::size_t> t(static_cast<std::size_t>(state.range(0))), p(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.below(kNumClasses);
    p[i] = rng.below(kNumClasses);
  }
  for (auto _ : state) benchmark::DoNotOptimize(weighted_f1(t, p));
}
BENCHMARK(BM_WeightedF1)->Arg(1000)->Arg(100000);

void BM_Attention(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  fusion::AttentionWeights w = fusion::AttentionWeights::identity(d, 4);
  std::vector<std::vector<double>> q(1, std::vector<double>(d)), kv(5, std::vector<double>(d));
  for (auto& v : q)
    for (double& x : v) x = rng.uniform(-1, 1);
  for (auto& v : kv)
    for (double& x : v) x = rng.uniform(-1, 1);
  const bool mask[] = {true, true, true, false, true};
  for (auto _ : state) benchmark::DoNotOptimize(fusion::attention(w, q, kv, kv, mask));
}
BENCHMARK(BM_Attention)->Arg(32)->Arg(128);

void BM_DiffuseMix(benchmark::State& state) {
  const std::size_t s = static_cast<std::size_t>(state.range(0));
  const Image img = Image::filled(s, s, 0.3, 0.5, 0.7);
  const StubImageGen gen(ImageGenMode::invert);
  DiffuseMixParams p;
  for (auto _ : state) benchmark::DoNotOptimize(diffusemix(img, p, gen));
}
BENCHMARK(BM_DiffuseMix)->Arg(64)->Arg(224);

}  // namespace

BENCHMARK_MAIN();
