// Copyright 2026 The saefh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include "sae/mse.hpp"
#include "sae/simulation.hpp"
#include "sae/variance.hpp"

namespace {

sae::FhDataset surrogate() {
  sae::SimDesign sd = sae::surrogate_design();
  sd.seed = 1;
  return sae::make_dataset(sd.design, sae::simulate_fh(sd, 0).y);
}

void BM_FitReml(benchmark::State& state) {
  const sae::FhDataset d = surrogate();
  for (auto _ : state) benchmark::DoNotOptimize(sae::fit_reml(d).value);
}
BENCHMARK(BM_FitReml);

void BM_FitMg(benchmark::State& state) {
  const sae::FhDataset d = surrogate();
  for (auto _ : state) benchmark::DoNotOptimize(sae::fit_mg(d, 0).value);
}
BENCHMARK(BM_FitMg);

void BM_FitMgAll(benchmark::State& state) {
  const sae::FhDataset d = surrogate();
  for (auto _ : state) benchmark::DoNotOptimize(sae::fit_mg_all(d));
}
BENCHMARK(BM_FitMgAll);

void BM_BootstrapPbHl(benchmark::State& state) {
  const sae::FhDataset d = surrogate();
  sae::BootstrapOptions opts;
  opts.replicates = static_cast<int>(state.range(0));
  opts.seed = 7;
  opts.areas = {0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sae::bootstrap_mse(d, sae::BootstrapVariant::kPbHl, opts).value);
  }
}
BENCHMARK(BM_BootstrapPbHl)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
