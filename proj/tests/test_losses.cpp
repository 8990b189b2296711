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

#include "avt/errors.hpp"
#include "avt/losses.hpp"
#include "avt/verify/oracles.hpp"
#include "avt/verify/suite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace avt;
using namespace avt::losses;
using mining::MiniBatch;

namespace {

IntVec ivec(std::initializer_list<int> v) {
  IntVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out(i++) = x;
  return out;
}

// Random batch with K <= 8 and D <= 16 whose hard-example selections are not near a tie.
verify::RandomBatch small_batch(Rng& rng) {
  for (;;) {
    auto b = verify::random_batch(rng);
    if (b.X.rows() > 8) {
      b.X = b.X.topRows(8).eval();
      b.Y = b.Y.head(8).eval();
      b.B = b.B.head(8).eval();
    }
    if (verify::selection_gap(b, kDefaultMargin) >= 1e-3) return b;
  }
}

}  // namespace

TEST(MissingModalityLoss, AllDistancesZeroGivesLn2) {
  MiniBatch b{Mat::Ones(4, 3), ivec({1, 1, 2, 2}), ivec({1, 1, 1, 0})};
  const auto v = missing_modality_loss(b);
  EXPECT_NEAR(v.value, std::log(2.0), 1e-15);
  EXPECT_EQ(v.anchors, 3);
}

TEST(MissingModalityLoss, NoValidAnchorsGivesZero) {
  MiniBatch b{Mat::Random(5, 3), ivec({1, 2, 1, 2, 3}), IntVec::Zero(5)};
  const auto v = missing_modality_loss(b);
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE(v.degenerate);
  EXPECT_TRUE((v.grad.array() == 0.0).all());
}

TEST(MissingModalityLoss, MatchesOracleOnRandomBatches) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto b = verify::random_batch(rng);
    const auto v = missing_modality_loss(MiniBatch{b.X, b.Y, b.B});
    EXPECT_NEAR(v.value, oracle::missing_modality_loss(b.X, b.Y, b.B), 1e-12);
    EXPECT_GE(v.value, 0.0);
  }
}

TEST(MissingModalityLoss, PermutationInvariant) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto b = verify::random_batch(rng);
    const Eigen::Index K = b.X.rows();
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MiniBatch p{Mat(K, b.X.cols()), IntVec(K), IntVec(K)};
    for (Eigen::Index i = 0; i < K; ++i) {
      const auto s = perm[static_cast<std::size_t>(i)];
      p.X.row(i) = b.X.row(s);
      p.Y(i) = b.Y(s);
      p.B(i) = b.B(s);
    }
    EXPECT_NEAR(missing_modality_loss(p).value, missing_modality_loss(MiniBatch{b.X, b.Y, b.B}).value, 1e-12);
  }
}

TEST(MissingModalityLoss, PushingNearestMissingAwayNeverIncreasesLoss) {
  // One valid anchor per class pair, one missing point that moves away along a line.
  Mat X(4, 2);
  X << 0, 0, 0.5, 0, 0, 1, 0.2, 0.2;
  const IntVec Y = ivec({1, 1, 2, 3}), B = ivec({1, 1, 1, 0});
  double previous = missing_modality_loss(MiniBatch{X, Y, B}).value;
  for (int step = 1; step <= 20; ++step) {
    X.row(3) = RowVec::Constant(2, 0.2 + 0.1 * step);
    const double now = missing_modality_loss(MiniBatch{X, Y, B}).value;
    EXPECT_LE(now, previous + 1e-15);
    previous = now;
  }
}

TEST(MissingModalityLoss, DuplicatedMissingPointLeavesValueUnchanged) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    auto b = verify::random_batch(rng);
    Eigen::Index m = -1;
    for (Eigen::Index i = 0; i < b.B.size(); ++i)
      if (!b.B(i)) m = i;
    if (m < 0) continue;
    const Eigen::Index K = b.X.rows();
    MiniBatch d{Mat(K + 1, b.X.cols()), IntVec(K + 1), IntVec(K + 1)};
    d.X << b.X, b.X.row(m);
    d.Y << b.Y, b.Y(m);
    d.B << b.B, 0;
    EXPECT_NEAR(missing_modality_loss(d).value, missing_modality_loss(MiniBatch{b.X, b.Y, b.B}).value, 1e-12);
  }
}

TEST(MissingModalityLoss, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (bool squared : {false, true}) {
    for (int t = 0; t < 25; ++t) {
      const auto b = small_batch(rng);
      MissingModalityOptions opt;
      opt.mining.squared = squared;
      const auto v = missing_modality_loss(MiniBatch{b.X, b.Y, b.B}, opt);
      const Mat fd = oracle::finite_difference(
          [&](const Mat& X) { return missing_modality_loss(MiniBatch{X, b.Y, b.B}, opt).value; }, b.X, 1e-5);
      EXPECT_LT(oracle::relative_error(v.grad, fd), 1e-4) << "squared=" << squared;
    }
  }
}

TEST(MissingModalityLoss, CapClampsTermAndItsGradient) {
  Mat X(3, 1);
  X << 0, 1, 5;
  const IntVec Y = ivec({1, 2, 3}), B = ivec({1, 1, 0});
  MissingModalityOptions cap;
  cap.missing_distance_cap = 2.0;
  const auto capped = missing_modality_loss(MiniBatch{X, Y, B}, cap);
  const double expected = (softplus(0.0 - 1.0 - 2.0) + softplus(0.0 - 1.0 - 2.0)) / 2.0;
  EXPECT_NEAR(capped.value, expected, 1e-15);
  EXPECT_EQ(capped.grad(2, 0), 0.0);
}

TEST(TripletHardLoss, SeparatedClustersGiveZero) {
  Mat X(4, 1);
  X << 0, 0, 2, 2;
  const auto v = triplet_hard_loss(X, ivec({1, 1, 2, 2}));
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE((v.grad.array() == 0.0).all());
}

TEST(TripletHardLoss, CoincidentPointsGiveMargin) {
  const auto v = triplet_hard_loss(Mat::Zero(4, 3), ivec({1, 1, 2, 2}));
  EXPECT_NEAR(v.value, 0.2, 1e-15);
}

TEST(TripletHardLoss, SingleClassIsDegenerate) {
  const auto v = triplet_hard_loss(Mat::Random(4, 3), ivec({3, 3, 3, 3}));
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE(v.degenerate);
}

TEST(TripletHardLoss, MatchesOracleAndGradient) {
  Rng rng(15);
  for (int t = 0; t < 200; ++t) {
    const auto b = verify::random_batch(rng);
    EXPECT_NEAR(triplet_hard_loss(b.X, b.Y).value, oracle::triplet_hard_loss(b.X, b.Y, 0.2), 1e-12);
  }
  for (int t = 0; t < 25; ++t) {
    const auto b = small_batch(rng);
    const auto v = triplet_hard_loss(b.X, b.Y);
    const Mat fd =
        oracle::finite_difference([&](const Mat& X) { return triplet_hard_loss(X, b.Y).value; }, b.X, 1e-5);
    EXPECT_LT(oracle::relative_error(v.grad, fd), 1e-4);
  }
  EXPECT_THROW(triplet_hard_loss(Mat::Zero(3, 2), ivec({1, 2})), InputError);
}

TEST(TotalLoss, SumsItsTerms) {
  MiniBatch same{Mat::Ones(4, 3), ivec({1, 1, 2, 2}), ivec({1, 0, 1, 1})};
  MiniBatch joint{Mat::Zero(4, 6), ivec({1, 1, 2, 2}), IntVec::Ones(4)};
  const auto t = total_loss(&same, &same, &same, &joint);
  EXPECT_NEAR(t.breakdown.L_total, 3.0 * std::log(2.0) + 0.2, 1e-14);

  MiniBatch empty{Mat::Random(4, 3), ivec({1, 1, 2, 2}), IntVec::Zero(4)};
  Mat sep(4, 1);
  sep << 0, 0, 2, 2;
  MiniBatch separated{sep, ivec({1, 1, 2, 2}), IntVec::Ones(4)};
  EXPECT_EQ(total_loss(&empty, &empty, &empty, &separated).breakdown.L_total, 0.0);
}

TEST(TotalLoss, MatchesIndependentTermsOnRandomBatches) {
  Rng rng(16);
  for (int t = 0; t < 50; ++t) {
    const auto a = verify::random_batch(rng);
    const Eigen::Index K = a.X.rows();
    MiniBatch s{a.X, a.Y, a.B};
    MiniBatch c{Mat::Random(K, 4), a.Y, IntVec::Ones(K)};
    MiniBatch th{Mat::Random(K, 5), a.Y, a.B.reverse()};
    MiniBatch j{Mat::Random(K, 6), a.Y, IntVec::Ones(K)};
    const auto total = total_loss(&s, &c, &th, &j);
    const double expected = oracle::missing_modality_loss(s.X, s.Y, s.B) +
                            oracle::missing_modality_loss(c.X, c.Y, c.B) +
                            oracle::missing_modality_loss(th.X, th.Y, th.B) + oracle::triplet_hard_loss(j.X, j.Y, 0.2);
    EXPECT_NEAR(total.breakdown.L_total, expected, 1e-12);
  }
}

TEST(TotalLoss, RejectsMisalignedBatches) {
  MiniBatch a{Mat::Zero(3, 2), ivec({1, 2, 3}), IntVec::Ones(3)};
  MiniBatch b{Mat::Zero(3, 2), ivec({1, 3, 2}), IntVec::Ones(3)};
  EXPECT_THROW(total_loss(&a, &b, nullptr, nullptr), InputError);
}

TEST(Softplus, StableAtExtremes) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1e-300);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
}
