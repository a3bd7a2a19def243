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

#include <random>

#include "benchmark/benchmark.h"
#include "hhf/losses.h"
#include "hhf/training.h"

namespace hhf {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

LatentBatch random_batch(std::size_t b, std::size_t k, std::uint32_t classes,
                         std::mt19937_64& rng) {
  LatentBatch batch{random_matrix(b, k, rng), {}};
  for (std::size_t i = 0; i < b; ++i) {
    batch.labels.push_back({static_cast<std::uint32_t>(i % classes)});
  }
  return batch;
}

// Args: batch size, code length; 100 classes.
void BM_HhfProxyAnchor(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const LatentBatch batch =
      random_batch(state.range(0), state.range(1), 100, rng);
  const Matrix proxies = random_matrix(100, state.range(1), rng);
  HHFParams params;
  params.zeta = -0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hhf_proxy_anchor_loss(batch, proxies, params));
  }
}
BENCHMARK(BM_HhfProxyAnchor)->Args({64, 16})->Args({64, 64})->Args({256, 64});

void BM_HhfDhn(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const LatentBatch batch = random_batch(state.range(0), 64, 10, rng);
  HHFParams params;
  params.zeta = -0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hhf_dhn_pairwise_loss(batch, params));
  }
}
BENCHMARK(BM_HhfDhn)->Arg(64)->Arg(256);

// One forward/backward/update step of the desk-scale encoder.
void BM_TrainStep(benchmark::State& state) {
  std::mt19937_64 rng(3);
  EncoderConfig enc;
  enc.input_dim = 32;
  enc.hidden_dims = {64};
  enc.hash_bits = 16;
  enc.seed = 4;
  TrainConfig train;
  TrainState s = init_state(enc, train, 8);
  const Matrix x = random_matrix(state.range(0), 32, rng);
  std::vector<LabelSet> y;
  for (long i = 0; i < state.range(0); ++i) {
    y.push_back({static_cast<std::uint32_t>(i % 8)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_gradients(s, x, y));
    sgd_step(s, 0);
  }
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(256);

}  // namespace
}  // namespace hhf
