/*
 * Copyright 2026 The AVTNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "avt/losses.hpp"
#include "avt/mining.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace avt;

namespace {

mining::MiniBatch make_batch(int K, int D) {
  Rng rng(static_cast<std::uint64_t>(K) * 31 + static_cast<std::uint64_t>(D));
  std::normal_distribution<double> gauss;
  mining::MiniBatch b{Mat(K, D), IntVec(K), IntVec(K)};
  for (Eigen::Index i = 0; i < b.X.size(); ++i) b.X.data()[i] = gauss(rng);
  for (int i = 0; i < K; ++i) {
    b.Y(i) = i % 8;
    b.B(i) = i % 4 == 3 ? 0 : 1;
  }
  return b;
}

void BM_PairwiseDistances(benchmark::State& state) {
  const auto b = make_batch(static_cast<int>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(mining::pairwise_distances(b.X));
}
BENCHMARK(BM_PairwiseDistances)->Arg(32)->Arg(128)->Arg(512);

void BM_MissingModalityLoss(benchmark::State& state) {
  const auto b = make_batch(static_cast<int>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(losses::missing_modality_loss(b));
}
BENCHMARK(BM_MissingModalityLoss)->Arg(32)->Arg(128)->Arg(512);

void BM_TripletHardLoss(benchmark::State& state) {
  const auto b = make_batch(static_cast<int>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(losses::triplet_hard_loss(b.X, b.Y));
}
BENCHMARK(BM_TripletHardLoss)->Arg(32)->Arg(128)->Arg(512);

}  // namespace
