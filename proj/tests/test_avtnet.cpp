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
#include "avt/errors.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace avt;
using namespace avt::model;
using data::Modality;

namespace {

std::vector<data::ModalitySample> batch_of(const AVTNetConfig& c, int n, Rng& rng) {
  std::vector<data::ModalitySample> out;
  for (int i = 0; i < n; ++i) out.push_back(test::random_sample(c.input, test::condition(i), i % c.n_classes, rng));
  return out;
}

Architecture with_joint(JointKind kind) {
  Architecture a;
  a.joint = kind;
  return a;
}

double weighted(const Embeddings& e, const std::array<Mat, 3>& w, const Mat& wj) {
  double s = 0;
  for (int k = 0; k < 3; ++k)
    if (e.individual[k].size() > 0) s += e.individual[k].cwiseProduct(w[k]).sum();
  if (e.joint.size() > 0) s += e.joint.cwiseProduct(wj).sum();
  return s;
}

}  // namespace

TEST(AVTNet, ShapesAndUnitNorms) {
  const auto c = test::tiny_config();
  Rng rng(1);
  const auto samples = batch_of(c, 8, rng);
  for (JointKind kind : {JointKind::Transformer, JointKind::Dense}) {
    AVTNet net(c, with_joint(kind), 3);
    const Embeddings e = net.infer(test::pointers(samples));
    for (int k = 0; k < 3; ++k) {
      ASSERT_EQ(e.features[k].rows(), 8);
      ASSERT_EQ(e.features[k].cols(), c.feature_dim);
      ASSERT_EQ(e.individual[k].cols(), c.embed_dim);
      for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(e.individual[k].row(i).norm(), 1.0, 1e-9);
    }
    ASSERT_EQ(e.joint.rows(), 8);
    for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(e.joint.row(i).norm(), 1.0, 1e-9);
    EXPECT_EQ(concat_embeddings(e).cols(), 4 * c.embed_dim);
    EXPECT_EQ(concat_features(e).cols(), 3 * c.feature_dim);
  }
}

TEST(AVTNet, MissingModalityEmbeddingIsShared) {
  const auto c = test::tiny_config();
  Rng rng(2);
  std::vector<data::ModalitySample> samples;
  for (int i = 0; i < 6; ++i) samples.push_back(test::random_sample(c.input, test::missing({Modality::Thermal}), i % 4, rng));
  AVTNet net(c, Architecture{}, 4);
  const Embeddings e = net.infer(test::pointers(samples));
  const int t = data::index_of(Modality::Thermal);
  for (Eigen::Index i = 1; i < 6; ++i) {
    EXPECT_EQ(e.individual[t].row(i), e.individual[t].row(0));
    EXPECT_NE(e.individual[0].row(i), e.individual[0].row(0));
  }
  EXPECT_NEAR(e.individual[t].row(0).norm(), 1.0, 1e-9);
}

TEST(AVTNet, EmbedMatchesBatchInference) {
  const auto c = test::tiny_config();
  Rng rng(3);
  const auto samples = batch_of(c, 4, rng);
  AVTNet net(c, Architecture{}, 5);
  const Embeddings e = net.infer(test::pointers(samples));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EmbeddingBundle b = net.embed(samples[i]);
    EXPECT_LT((b.visible.transpose() - e.individual[1].row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((b.joint.transpose() - e.joint.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(concat_embeddings(b).size(), 4 * c.embed_dim);
  }
}

TEST(AVTNet, SeedDeterminism) {
  const auto c = test::tiny_config();
  Rng rng(4);
  const auto samples = batch_of(c, 4, rng);
  AVTNet a(c, Architecture{}, 9), b(c, Architecture{}, 9), other(c, Architecture{}, 10);
  const auto ea = a.infer(test::pointers(samples));
  EXPECT_EQ(ea.joint, b.infer(test::pointers(samples)).joint);
  EXPECT_NE(ea.joint, other.infer(test::pointers(samples)).joint);
}

TEST(AVTNet, AttentionRowsSumToOne) {
  const auto c = test::tiny_config();
  Rng rng(5);
  const auto samples = batch_of(c, 4, rng);
  AVTNet net(c, Architecture{}, 6);
  std::vector<Mat> attention;
  net.infer(test::pointers(samples), &attention);
  ASSERT_FALSE(attention.empty());
  for (const Mat& a : attention) {
    EXPECT_EQ(a.cols(), 3);
    EXPECT_LT((a.rowwise().sum() - Vec::Ones(a.rows())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AVTNet, ZeroedHeadStaysFinite) {
  const auto c = test::tiny_config();
  Rng rng(6);
  const auto samples = batch_of(c, 4, rng);
  AVTNet net(c, Architecture{}, 7);
  net.head(Modality::Audio).zero_weights();
  const Embeddings e = net.infer(test::pointers(samples));
  EXPECT_TRUE(e.individual[0].allFinite());
  EXPECT_TRUE(e.joint.allFinite());
}

TEST(AVTNet, DisabledPartsAreEmpty) {
  const auto c = test::tiny_config();
  Rng rng(7);
  const auto samples = batch_of(c, 4, rng);
  Architecture a;
  a.modalities = {true, false, true};
  a.individual = false;
  AVTNet net(c, a, 8);
  const Embeddings e = net.infer(test::pointers(samples));
  EXPECT_EQ(e.individual[0].size(), 0);
  EXPECT_EQ(e.features[1].size(), 0);
  EXPECT_EQ(e.joint.cols(), c.embed_dim);
  EXPECT_EQ(a.embedding_count(), 1);
}

TEST(AVTNet, RejectsMismatchedInput) {
  const auto c = test::tiny_config();
  Rng rng(8);
  data::InputShape other = c.input;
  other.image_size = 20;
  const auto bad = test::random_sample(other, data::Validity{}, 0, rng);
  AVTNet net(c, Architecture{}, 1);
  EXPECT_ANY_THROW(net.infer({&bad}));
}

TEST(AVTNet, GradientMatchesFiniteDifferences) {
  const auto c = test::tiny_config();
  for (JointKind kind : {JointKind::Transformer, JointKind::Dense}) {
    Rng rng(9);
    // Fully observed samples: a zero input puts zero-initialised biases exactly on the ReLU kink.
    std::vector<data::ModalitySample> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(test::random_sample(c.input, data::Validity{}, i, rng));
    const auto ptrs = test::pointers(samples);
    AVTNet net(c, with_joint(kind), 11);
    std::array<Mat, 3> w;
    for (auto& m : w) m = Mat::Random(4, c.embed_dim);
    const Mat wj = Mat::Random(4, c.embed_dim);
    auto params = net.parameters();
    nn::zero_grad(params);
    net.forward(ptrs);
    net.backward(w, wj);

    // Sample a few coordinates from every parameter tensor.
    double worst = 0.0;
    std::uniform_int_distribution<int> pick(0, 1 << 20);
    for (nn::Parameter* p : params) {
      for (int s = 0; s < 4; ++s) {
        const Eigen::Index i = pick(rng) % p->value.size();
        double& v = p->value.data()[i];
        const double keep = v, h = 1e-6;
        v = keep + h;
        const double up = weighted(net.infer(ptrs), w, wj);
        v = keep - h;
        const double down = weighted(net.infer(ptrs), w, wj);
        v = keep;
        const double numeric = (up - down) / (2 * h);
        const double analytic = p->grad.data()[i];
        worst = std::max(worst, std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric) + std::abs(analytic)));
      }
    }
    EXPECT_LT(worst, 1e-5);
  }
}

TEST(AVTNetConfig, ValidationAndRoundTrip) {
  auto c = test::tiny_config();
  EXPECT_NO_THROW(c.validate());
  const auto back = AVTNetConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.audio_filters, c.audio_filters);
  EXPECT_EQ(back.image_filters, c.image_filters);
  EXPECT_EQ(back.input, c.input);
  EXPECT_EQ(back.embed_dim, c.embed_dim);
  c.transformer_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  auto d = test::tiny_config();
  d.audio_filters = {};
  EXPECT_THROW(d.validate(), ConfigError);
  const auto full = AVTNetConfig::full();
  EXPECT_EQ(full.embed_dim, 256);
  EXPECT_EQ(full.n_classes, 75);
  EXPECT_EQ(full.input.image_size, 224);
}

TEST(Recognizer, ProbabilitiesAndWidthChecks) {
  Recognizer r(4 * 256, {512, 256}, 75, 1);
  const Mat x = Mat::Random(3, 4 * 256);
  const Mat p = r.predict_proba(x);
  ASSERT_EQ(p.cols(), 75);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  EXPECT_EQ(r.predict(x).size(), 3);

  EmbeddingBundle b;
  b.audio = b.visible = b.thermal = Vec::Ones(256) / 16.0;
  EXPECT_THROW(recognizer_forward(r, b), ConfigError);
  b.joint = b.audio;
  EXPECT_EQ(recognizer_forward(r, b).size(), 75);
}

TEST(Recognizer, TrainingGradientMatchesFiniteDifferences) {
  Recognizer r(6, {5, 4}, 3, 2);
  const Mat x = Mat::Random(6, 6);
  IntVec y(6);
  y << 0, 1, 2, 0, 1, 2;
  auto params = r.parameters();
  nn::zero_grad(params);
  Mat d_logits;
  nn::softmax_cross_entropy(r.forward(x), y, &d_logits);
  r.backward(d_logits);
  double worst = 0.0;
  for (nn::Parameter* p : params) {
    if (!p->trainable) continue;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double keep = v, h = 1e-6;
      Recognizer copy_up = r, copy_down = r;
      v = keep + h;
      copy_up = r;
      const double up = nn::softmax_cross_entropy(copy_up.forward(x), y);
      v = keep - h;
      copy_down = r;
      const double down = nn::softmax_cross_entropy(copy_down.forward(x), y);
      v = keep;
      worst = std::max(worst, std::abs((up - down) / (2 * h) - p->grad.data()[i]));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(JointTransformer, TokenOrderMatters) {
  const auto c = test::tiny_config();
  Rng rng(10);
  JointTransformer t(3 * c.feature_dim, c, rng, "jt");
  EXPECT_EQ(t.tokens(), 3);
  Mat x = Mat::Random(1, 3 * c.feature_dim);
  Mat swapped = x;
  swapped.middleCols(0, c.feature_dim) = x.middleCols(c.feature_dim, c.feature_dim);
  swapped.middleCols(c.feature_dim, c.feature_dim) = x.middleCols(0, c.feature_dim);
  EXPECT_GT((t.infer(x) - t.infer(swapped)).cwiseAbs().maxCoeff(), 1e-6);
}
