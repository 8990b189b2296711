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

#pragma once

#include "avt/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace avt::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Random K x D batch with K in [4, 16], D in [2, 16], 2 to 5 classes and each
/// sample missing with probability `p_missing`.
struct RandomBatch {
  Mat X;
  IntVec Y, B;
};
RandomBatch random_batch(Rng& rng, double p_missing = 0.3);

/// Smallest gap between the chosen hard example and the runner-up in any
/// candidate set, and between each active hinge / softplus argument and its kink.
double selection_gap(const RandomBatch& batch, double margin);

/// Library losses vs the brute-force oracles within 1e-6 absolute.
CheckResult check_mining_oracle(int batches = 200, std::uint64_t seed = 1);
/// Hand-enumerated 3-sample example plus mask invariants over random draws.
CheckResult check_mask_definitions(int draws = 1000, std::uint64_t seed = 2);
/// Analytic vs central-difference gradients of both losses, relative error < 1e-4.
CheckResult check_loss_gradients(int batches = 50, std::uint64_t seed = 3);
/// Unit-norm embeddings, attention row sums and e^m consistency on random
/// toy-scale inputs, for several random initialisations.
CheckResult check_model_invariants(int networks = 3, std::uint64_t seed = 4);
/// Every parameter gradient of the composite loss is finite on random batches.
CheckResult check_finite_gradients(int batches = 3, std::uint64_t seed = 5);

std::vector<CheckResult> run_all(std::uint64_t seed = 0);

/// "PASS name: detail (1.23 s)"
std::string format(const CheckResult& result);

}  // namespace avt::verify
