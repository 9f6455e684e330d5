// Copyright 2026 The hardpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// OpenMP kernels against the serial reference. Run with
// --benchmark_filter=... to pick a kernel; the workers argument is the
// second range value (0 selects the serial reference).

#include <benchmark/benchmark.h>

#include <random>

#include "hardpair/embedstore.hpp"
#include "hardpair/log.hpp"
#include "hardpair/miner.hpp"
#include "hardpair/reference.hpp"
#include "hardpair/trainer.hpp"

namespace {

using namespace hardpair;

PairDataset bench_dataset(std::size_t n, std::size_t dim) {
  SynthConfig c;
  c.num_clusters = 16;
  c.per_cluster = n / 16;
  c.image_dim = dim;
  c.text_dim = dim;
  c.noise_scale = 0.2;
  c.seed = 1;
  return synth_clusters(c).dataset;
}

void BM_mine_hpm(benchmark::State& state) {
  log::set_min_level(log::Level::error);
  auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)), 32);
  int workers = static_cast<int>(state.range(1));
  MiningConfig c{.k = 20, .tau_image = 0.3, .tau_text = 0.3, .workers = workers};
  for (auto _ : state) {
    auto r = workers == 0 ? reference::mine_hpm(ds, c) : mine_hpm(ds, c);
    benchmark::DoNotOptimize(r.results.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_mine_fast(benchmark::State& state) {
  log::set_min_level(log::Level::error);
  auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)), 32);
  int workers = static_cast<int>(state.range(1));
  MiningConfig c{.k = 20, .tau_image = 0.3, .tau_text = 0.3, .pool_size = 256, .seed = 3, .workers = workers};
  for (auto _ : state) {
    auto r = workers == 0 ? reference::mine_fast(ds, c) : mine_fast(ds, c);
    benchmark::DoNotOptimize(r.results.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_partner_ranks(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  int workers = static_cast<int>(state.range(1));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Matrix<double> image(n, 32), text(n, 32);
  for (double& v : image.data()) v = normal(rng);
  for (double& v : text.data()) v = normal(rng);
  for (auto _ : state) {
    auto r = workers == 0 ? reference::partner_ranks(image, text) : partner_ranks(image, text, workers);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void worker_grid(benchmark::internal::Benchmark* b) {
  for (long n : {512, 2048}) {
    for (long w : {0, 1, 2, 4}) b->Args({n, w});
  }
}

BENCHMARK(BM_mine_hpm)->Apply(worker_grid)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_mine_fast)->Apply(worker_grid)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_partner_ranks)->Apply(worker_grid)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
