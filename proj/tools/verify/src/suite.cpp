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

#include "avt/verify/suite.hpp"

#include "avt/avtnet.hpp"
#include "avt/losses.hpp"
#include "avt/mining.hpp"
#include "avt/verify/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace avt::verify {
namespace {

using Clock = std::chrono::steady_clock;

CheckResult timed(const std::string& name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& ex) {
    r.passed = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Gap between the extreme and the runner-up of d over the candidates; infinity
// when fewer than two candidates exist.
double runner_up_gap(const std::vector<double>& d, bool want_max) {
  if (d.size() < 2) return std::numeric_limits<double>::infinity();
  std::vector<double> s = d;
  std::sort(s.begin(), s.end());
  return want_max ? s[s.size() - 1] - s[s.size() - 2] : s[1] - s[0];
}

data::ModalitySample random_sample(const data::InputShape& shape, const data::Validity& validity, int label,
                                   Rng& rng) {
  std::normal_distribution<double> gauss;
  data::ModalitySample s;
  s.subject_id = label;
  s.validity = validity;
  for (data::Modality m : data::kModalities) {
    FeatureMap t = data::zero_tensor(m, shape);
    if (validity[m])
      for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = gauss(rng);
    s.tensor(m) = std::move(t);
  }
  return s;
}

data::Validity validity_for(int i) {
  data::Validity v;
  if (i % 4 > 0) v.flags[static_cast<std::size_t>(i % 4 - 1)] = false;
  return v;
}

}  // namespace

RandomBatch random_batch(Rng& rng, double p_missing) {
  std::uniform_int_distribution<int> k_dist(4, 16), d_dist(2, 16), c_dist(2, 5);
  std::bernoulli_distribution missing(p_missing);
  std::normal_distribution<double> gauss;
  const int K = k_dist(rng), D = d_dist(rng), C = c_dist(rng);
  std::uniform_int_distribution<int> label(0, C - 1);
  RandomBatch b;
  b.X.resize(K, D);
  for (Eigen::Index i = 0; i < b.X.size(); ++i) b.X.data()[i] = gauss(rng);
  b.Y.resize(K);
  b.B.resize(K);
  for (int i = 0; i < K; ++i) {
    b.Y(i) = label(rng);
    b.B(i) = missing(rng) ? 0 : 1;
  }
  return b;
}

double selection_gap(const RandomBatch& batch, double margin) {
  const Eigen::Index K = batch.X.rows();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < K; ++a) {
    // missing-modality candidate sets (valid anchors only)
    std::vector<double> vp, vn, m;
    // triplet candidate sets (every sample valid)
    std::vector<double> tp, tn;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (j == a) continue;
      const double d = oracle::distance(batch.X, a, j);
      (batch.Y(j) == batch.Y(a) ? tp : tn).push_back(d);
      if (batch.B(a) == 0) continue;
      if (batch.B(j) == 0)
        m.push_back(d);
      else
        (batch.Y(j) == batch.Y(a) ? vp : vn).push_back(d);
    }
    gap = std::min({gap, runner_up_gap(vp, true), runner_up_gap(vn, false), runner_up_gap(m, false),
                    runner_up_gap(tp, true), runner_up_gap(tn, false)});
    if (!tp.empty() && !tn.empty()) {
      const double hinge = *std::max_element(tp.begin(), tp.end()) - *std::min_element(tn.begin(), tn.end()) + margin;
      gap = std::min(gap, std::abs(hinge));
    }
  }
  return gap;
}

CheckResult check_mining_oracle(int batches, std::uint64_t seed) {
  return timed("mining oracle equivalence", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < batches; ++t) {
      const RandomBatch b = random_batch(rng);
      const double mm = losses::missing_modality_loss({b.X, b.Y, b.B}).value;
      const double th = losses::triplet_hard_loss(b.X, b.Y, losses::kDefaultMargin).value;
      worst = std::max(worst, std::abs(mm - oracle::missing_modality_loss(b.X, b.Y, b.B)));
      worst = std::max(worst, std::abs(th - oracle::triplet_hard_loss(b.X, b.Y, losses::kDefaultMargin)));
    }
    r.passed = worst <= 1e-6;
    r.detail = std::to_string(batches) + " batches, max |library - oracle| = " + sci(worst);
  });
}

CheckResult check_mask_definitions(int draws, std::uint64_t seed) {
  return timed("mask definitions", [&](CheckResult& r) {
    // Y = [1, 1, 2], B = [1, 0, 1]
    IntVec Y(3), B(3);
    Y << 1, 1, 2;
    B << 1, 0, 1;
    const auto m = mining::build_masks(Y, B);
    auto mat = [](std::initializer_list<int> v) {
      BoolMat out(3, 3);
      auto it = v.begin();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = *it++ != 0;
      return out;
    };
    bool example = m.positive == mat({1, 1, 0, 1, 1, 0, 0, 0, 1}) && m.valid == mat({1, 0, 1, 0, 0, 0, 1, 0, 1}) &&
                   m.missing == mat({0, 1, 0, 1, 1, 1, 0, 1, 0}) &&
                   m.valid_positive == mat({0, 0, 0, 0, 0, 0, 0, 0, 0}) &&
                   m.negative == mat({0, 0, 1, 0, 0, 1, 1, 1, 0}) &&
                   m.valid_negative == mat({0, 0, 1, 0, 0, 0, 1, 0, 0});

    Rng rng(seed);
    int violations = 0;
    for (int t = 0; t < draws; ++t) {
      const RandomBatch b = random_batch(rng);
      const auto s = mining::build_masks(b.Y, b.B);
      const Eigen::Index K = b.Y.size();
      for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < K; ++j) {
          const bool pos = b.Y(i) == b.Y(j);
          const bool val = b.B(i) != 0 && b.B(j) != 0;
          bool ok = s.positive(i, j) == pos && s.valid(i, j) == val;
          ok = ok && s.missing(i, j) == !s.valid(i, j) && s.negative(i, j) == !s.positive(i, j);
          ok = ok && s.valid_positive(i, j) == (i != j && s.positive(i, j) && s.valid(i, j));
          ok = ok && s.valid_negative(i, j) == (s.negative(i, j) && s.valid(i, j));
          if (!ok) ++violations;
        }
    }
    r.passed = example && violations == 0;
    r.detail = std::string("hand example ") + (example ? "matches" : "DIFFERS") + ", " + std::to_string(violations) +
               " invariant violations over " + std::to_string(draws) + " draws";
  });
}

CheckResult check_loss_gradients(int batches, std::uint64_t seed) {
  return timed("loss gradients vs finite differences", [&](CheckResult& r) {
    Rng rng(seed);
    std::normal_distribution<double> jitter(0.0, 1e-2);
    double worst = 0.0;
    int perturbed = 0;
    for (int t = 0; t < batches; ++t) {
      RandomBatch b = random_batch(rng);
      // Move the batch off mining ties and hinge kinks so central differences see one smooth piece.
      while (selection_gap(b, losses::kDefaultMargin) < 1e-3) {
        for (Eigen::Index i = 0; i < b.X.size(); ++i) b.X.data()[i] += jitter(rng);
        ++perturbed;
      }
      const auto mm = [&](const Mat& X) { return losses::missing_modality_loss({X, b.Y, b.B}).value; };
      const auto th = [&](const Mat& X) { return losses::triplet_hard_loss(X, b.Y, losses::kDefaultMargin).value; };
      worst = std::max(worst, oracle::relative_error(losses::missing_modality_loss({b.X, b.Y, b.B}).grad,
                                                     oracle::finite_difference(mm, b.X)));
      worst = std::max(worst, oracle::relative_error(losses::triplet_hard_loss(b.X, b.Y, losses::kDefaultMargin).grad,
                                                     oracle::finite_difference(th, b.X)));
    }
    r.passed = worst < 1e-4;
    r.detail = std::to_string(batches) + " batches (" + std::to_string(perturbed) +
               " tie perturbations), max relative error = " + sci(worst);
  });
}

CheckResult check_model_invariants(int networks, std::uint64_t seed) {
  return timed("model invariants", [&](CheckResult& r) {
    double worst_norm = 0.0, worst_rows = 0.0, worst_shared = 0.0, min_weight = 0.0;
    for (int n = 0; n < networks; ++n) {
      const auto config = model::AVTNetConfig::toy(8);
      const model::AVTNet net(config, {}, seed + static_cast<std::uint64_t>(n));
      Rng rng(seed * 7919 + static_cast<std::uint64_t>(n));
      std::vector<data::ModalitySample> samples;
      for (int i = 0; i < 8; ++i) samples.push_back(random_sample(config.input, validity_for(i), i % 4, rng));
      std::vector<const data::ModalitySample*> ptrs;
      for (const auto& s : samples) ptrs.push_back(&s);

      std::vector<Mat> attention;
      const model::Embeddings e = net.infer(ptrs, &attention);
      for (const Mat* part : {&e.individual[0], &e.individual[1], &e.individual[2], &e.joint})
        worst_norm = std::max(worst_norm, (part->rowwise().norm().array() - 1.0).abs().maxCoeff());
      for (const Mat& a : attention) {
        worst_rows = std::max(worst_rows, (a.rowwise().sum().array() - 1.0).abs().maxCoeff());
        min_weight = std::min(min_weight, a.minCoeff());
      }
      for (data::Modality m : data::kModalities) {
        const Mat& x = e.individual[static_cast<std::size_t>(data::index_of(m))];
        Eigen::Index first = -1;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          if (samples[static_cast<std::size_t>(i)].validity[m]) continue;
          if (first < 0)
            first = i;
          else
            worst_shared = std::max(worst_shared, (x.row(i) - x.row(first)).cwiseAbs().maxCoeff());
        }
      }
    }
    r.passed = worst_norm <= 1e-5 && worst_rows <= 1e-6 && min_weight >= 0.0 && worst_shared <= 1e-6;
    r.detail = "max |norm - 1| = " + sci(worst_norm) + ", max |attention row sum - 1| = " + sci(worst_rows) +
               ", max e^m spread = " + sci(worst_shared);
  });
}

CheckResult check_finite_gradients(int batches, std::uint64_t seed) {
  return timed("finite parameter gradients", [&](CheckResult& r) {
    const auto config = model::AVTNetConfig::toy(4);
    model::AVTNet net(config, {}, seed);
    const nn::ParameterList params = net.parameters();
    Rng rng(seed);
    bool finite = true;
    double norm = 0.0;
    for (int t = 0; t < batches; ++t) {
      std::vector<data::ModalitySample> samples;
      for (int i = 0; i < 8; ++i) samples.push_back(random_sample(config.input, validity_for(i + t), i % 4, rng));
      std::vector<const data::ModalitySample*> ptrs;
      for (const auto& s : samples) ptrs.push_back(&s);
      const model::Embeddings e = net.forward(ptrs);
      IntVec y(8);
      for (int i = 0; i < 8; ++i) y(i) = samples[static_cast<std::size_t>(i)].subject_id;
      std::array<mining::MiniBatch, 3> mb;
      for (data::Modality m : data::kModalities) {
        const auto k = static_cast<std::size_t>(data::index_of(m));
        IntVec b(8);
        for (int i = 0; i < 8; ++i) b(i) = samples[static_cast<std::size_t>(i)].validity[m] ? 1 : 0;
        mb[k] = {e.individual[k], y, b};
      }
      const mining::MiniBatch joint{e.joint, y, IntVec::Ones(8)};
      const auto total = losses::total_loss(&mb[0], &mb[1], &mb[2], &joint);
      nn::zero_grad(params);
      net.backward({total.grad_audio, total.grad_visible, total.grad_thermal}, total.grad_joint);
      for (const auto* p : params) finite = finite && p->grad.allFinite();
      norm = std::max(norm, nn::gradient_norm(params));
      finite = finite && std::isfinite(total.breakdown.L_total);
    }
    r.passed = finite;
    r.detail = std::to_string(params.size()) + " parameter tensors, max gradient norm " + sci(norm);
  });
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  return {check_mining_oracle(200, seed + 1), check_mask_definitions(1000, seed + 2),
          check_loss_gradients(50, seed + 3), check_model_invariants(3, seed + 4),
          check_finite_gradients(3, seed + 5)};
}

std::string format(const CheckResult& result) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2f", result.seconds);
  return std::string(result.passed ? "PASS " : "FAIL ") + result.name + ": " + result.detail + " (" + secs + " s)";
}

}  // namespace avt::verify
