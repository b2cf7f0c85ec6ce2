// Copyright 2026 The erasehash Authors.
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

#include <benchmark/benchmark.h>

#include <random>

#include "erasehash/index.hpp"
#include "erasehash/ops.hpp"
#include "erasehash/trainer.hpp"

namespace erasehash {
namespace {

Tensor uniform(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

BitCodeMatrix random_codes(std::size_t n, std::size_t bits, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  BitCodeMatrix m(n, bits);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < bits; ++b) m.set_value(j, b, coin(rng) ? 1 : -1);
  return m;
}

// First backbone stage at the default image size.
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const Tensor x = uniform({3, 32, 32}, rng);
  const Tensor k = uniform({16, 3, 3, 3}, rng);
  const Tensor b = uniform({16}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, k, b, {2, 1}));
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  Tensor x = uniform({3, 32, 32}, rng);
  Tensor k = uniform({16, 3, 3, 3}, rng);
  Tensor b = uniform({16}, rng);
  const Tensor g = uniform({16, 16, 16}, rng);
  x.ensure_grad();
  k.ensure_grad();
  b.ensure_grad();
  for (auto _ : state) ops::conv2d_backward(g.values(), x, k, b, {2, 1});
}
BENCHMARK(BM_Conv2dBackward);

// Top-K over a database of range(0) codes.
void BM_QueryTopK(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t bits = static_cast<std::size_t>(state.range(1));
  std::vector<int> labels(n, 0);
  const HammingIndex index = build_index(random_codes(n, bits, rng), labels);
  const BitCodeMatrix query = random_codes(1, bits, rng);
  for (auto _ : state) benchmark::DoNotOptimize(index.query_topk(query.code(0), 100));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QueryTopK)->Args({10000, 16})->Args({10000, 48})->Args({100000, 32});

// One sweep over all columns of V for an r x n sample.
void BM_ColumnSweep(benchmark::State& state) {
  Rng rng(4);
  const std::size_t r = 256, n = static_cast<std::size_t>(state.range(0)), bits = 16;
  const Tensor u = uniform({r, bits}, rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::int8_t> entries(r * n);
  for (auto& e : entries) e = coin(rng) ? 1 : -1;
  std::vector<std::size_t> rows(r);
  for (std::size_t i = 0; i < r; ++i) rows[i] = i;
  const SimilarityMatrix s(rows, n, entries);
  const BitCodeMatrix start = random_codes(n, bits, rng);
  for (auto _ : state) {
    BitCodeMatrix v = start;
    benchmark::DoNotOptimize(update_v(v, u, s, 1));
  }
}
BENCHMARK(BM_ColumnSweep)->Arg(512)->Arg(2000);

}  // namespace
}  // namespace erasehash

BENCHMARK_MAIN();
