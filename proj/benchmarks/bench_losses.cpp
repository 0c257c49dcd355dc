// Copyright 2026 The relkd Authors
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

#include "relkd/losses.hpp"
#include "relkd/metrics.hpp"

namespace {

using namespace relkd;

void BM_RelationMatrix(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<Manifold>(state.range(1));
  RngStream rng(1);
  const Matrix a = random_normal(rng, n, 64);
  DistillConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(relation_matrix(a, a, cfg.kind(m), cfg));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_RelationMatrix)
    ->ArgsProduct({{32, 128}, {0, 1, 2}})
    ->ArgNames({"n", "manifold"});

void BM_SchemeLoss(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto scheme = static_cast<Scheme>(state.range(1));
  RngStream rng(2);
  const Matrix t = random_normal(rng, n, 64), s = random_normal(rng, n, 64);
  DistillConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scheme_loss(t, s, scheme, Manifold::Hyperbolic, cfg));
  }
}
BENCHMARK(BM_SchemeLoss)
    ->ArgsProduct({{32, 128}, {0, 1, 2}})
    ->ArgNames({"n", "scheme"});

void BM_KdSelfCross(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(3);
  const Matrix t = random_normal(rng, n, 64), s = random_normal(rng, n, 64);
  const LossResult task{0.0, Matrix(n, 64)};
  DistillConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_loss(task, t, s, cfg, Objective::SelfCross));
  }
}
BENCHMARK(BM_KdSelfCross)->Arg(32)->Arg(128);

void BM_Recall(benchmark::State &state) {
  const auto db_size = static_cast<std::size_t>(state.range(0));
  RngStream rng(4);
  const Matrix db = random_normal(rng, db_size, 64), q = random_normal(rng, 100, 64);
  GroundTruth truth;
  truth.positives.resize(q.rows());
  for (auto &p : truth.positives) p.push_back(rng.below(db_size));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_recall(q, db, truth));
  }
}
BENCHMARK(BM_Recall)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
