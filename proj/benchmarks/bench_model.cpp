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

#include "avt/avtnet.hpp"
#include "avt/nn.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace avt;

namespace {

std::vector<data::ModalitySample> random_batch(const data::InputShape& shape, int n) {
  Rng rng(3);
  std::normal_distribution<double> gauss;
  std::vector<data::ModalitySample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.sample_id = std::to_string(i);
    for (auto m : data::kModalities) {
      s.tensor(m) = data::zero_tensor(m, shape);
      for (Eigen::Index k = 0; k < s.tensor(m).data.size(); ++k) s.tensor(m).data.data()[k] = gauss(rng);
    }
  }
  return out;
}

std::vector<const data::ModalitySample*> pointers(const std::vector<data::ModalitySample>& v) {
  std::vector<const data::ModalitySample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

void BM_Conv2DForward(benchmark::State& state) {
  Rng rng(1);
  const int size = static_cast<int>(state.range(0));
  nn::Conv2D conv(16, 16, 3, 3, nn::Activation::ReLU, "c", rng);
  FeatureMap x(16, size, size);
  x.data.setRandom();
  for (auto _ : state) benchmark::DoNotOptimize(conv.infer(x));
}
BENCHMARK(BM_Conv2DForward)->Arg(32)->Arg(64);

void BM_SelfAttention(benchmark::State& state) {
  Rng rng(2);
  nn::MultiHeadSelfAttention mha(64, 4, "mha", rng);
  const Mat x = Mat::Random(32 * state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(mha.infer(x, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SelfAttention)->Arg(3)->Arg(12);

void BM_ToyNetworkTrainStep(benchmark::State& state) {
  const auto config = model::AVTNetConfig::toy(8);
  model::AVTNet net(config, model::Architecture{}, 1);
  const auto samples = random_batch(config.input, static_cast<int>(state.range(0)));
  const auto batch = pointers(samples);
  auto params = net.parameters();
  std::array<Mat, 3> grads;
  for (auto _ : state) {
    nn::zero_grad(params);
    const auto e = net.forward(batch);
    for (int k = 0; k < 3; ++k) grads[static_cast<std::size_t>(k)] = Mat::Ones(e.individual[k].rows(), e.individual[k].cols());
    net.backward(grads, Mat::Ones(e.joint.rows(), e.joint.cols()));
  }
}
BENCHMARK(BM_ToyNetworkTrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
