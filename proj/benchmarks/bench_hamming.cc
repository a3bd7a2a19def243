// Copyright 2026 The HHF Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "hhf/hamming_index.h"
#include "hhf/metrics.h"

namespace hhf {
namespace {

BinaryCode random_code(int bits, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> signs(bits);
  for (int& s : signs) s = coin(rng) ? 1 : -1;
  return BinaryCode::pack(signs);
}

CodeDatabase random_db(std::size_t n, int bits, std::uint32_t classes) {
  std::mt19937_64 rng(42);
  CodeDatabase db(bits);
  for (std::size_t i = 0; i < n; ++i) {
    db.add(random_code(bits, rng), {static_cast<std::uint32_t>(i % classes)});
  }
  return db;
}

// Args: database size, code length.
void BM_BatchDistances(benchmark::State& state) {
  const CodeDatabase db =
      random_db(state.range(0), static_cast<int>(state.range(1)), 10);
  std::mt19937_64 rng(7);
  const BinaryCode q = random_code(db.bits(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_distances(q, db));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchDistances)
    ->Args({1 << 16, 64})
    ->Args({1 << 20, 64})
    ->Args({1 << 20, 256})
    ->Unit(benchmark::kMillisecond);

// Args: database size, N.
void BM_TopN(benchmark::State& state) {
  const CodeDatabase db = random_db(state.range(0), 64, 10);
  std::mt19937_64 rng(8);
  const BinaryCode q = random_code(64, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_n(q, db, state.range(1)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TopN)
    ->Args({1 << 16, 100})
    ->Args({1 << 20, 100})
    ->Args({1 << 20, 1000})
    ->Unit(benchmark::kMillisecond);

void BM_Pack(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::vector<double> latent(state.range(0));
  std::normal_distribution<double> normal;
  for (double& v : latent) v = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BinaryCode::from_latent(latent));
  }
}
BENCHMARK(BM_Pack)->Arg(16)->Arg(64)->Arg(256);

void BM_MapAtN(benchmark::State& state) {
  const CodeDatabase db = random_db(state.range(0), 64, 10);
  const CodeDatabase queries = random_db(100, 64, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(map_at_n(queries, db, 100, {}));
  }
}
BENCHMARK(BM_MapAtN)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hhf
