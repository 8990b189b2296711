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

#include "avt/dataset.hpp"
#include "avt/io.hpp"
#include "avt/nn.hpp"
#include "avt/tensor.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace avt::model {

using data::Modality;

struct AVTNetConfig {
  data::InputShape input;
  /// Conv-1D filters per audio layer (kernel `audio_kernel`, stride 1, ReLU).
  std::vector<int> audio_filters{64, 64, 64};
  int audio_kernel = 11;
  /// 3x3 Conv-2D filters for each conv + max-pool stage; a final 1x1 conv
  /// with `feature_dim` filters follows.
  std::vector<int> image_filters{128, 128, 128};
  int feature_dim = 64;
  int embed_dim = 256;
  int transformer_heads = 4;
  int model_width = 64;
  int transformer_hidden = 400;
  /// Width of each attention token cut from the concatenated features;
  /// 0 means one token per modality.
  int token_width = 0;
  std::vector<int> recognizer_hidden{512, 256};
  int n_classes = 75;

  static AVTNetConfig full(int n_classes = 75);
  /// 64x64 images, 64-frame spectrograms and narrower convolutions.
  static AVTNetConfig toy(int n_classes);

  void validate() const;
  io::KeyValueConfig to_kv() const;
  static AVTNetConfig from_kv(const io::KeyValueConfig& kv);
};

enum class JointKind { None, Transformer, Dense };

/// Which parts of the network exist. Variants switch these on and off.
struct Architecture {
  std::array<bool, 3> modalities{true, true, true};
  bool individual = true;
  JointKind joint = JointKind::Transformer;

  bool enabled(Modality m) const { return modalities[data::index_of(m)]; }
  int enabled_count() const;
  int embedding_count() const { return (individual ? enabled_count() : 0) + (joint != JointKind::None ? 1 : 0); }
};

/// Convolutional front end: conv stages, optional 2x2 pooling, global average pool.
class FeatureBranch {
 public:
  FeatureBranch() = default;
  static FeatureBranch audio(const AVTNetConfig& config, Rng& rng, const std::string& name);
  static FeatureBranch image(int channels, const AVTNetConfig& config, Rng& rng, const std::string& name);

  RowVec infer(const FeatureMap& x) const;
  Mat forward(const std::vector<FeatureMap>& batch);
  void backward(const Mat& d_features);
  void collect(nn::ParameterList& out);

 private:
  struct Stage {
    nn::Conv2D conv;
    bool pool = false;
    nn::MaxPool2D pooler;
  };
  std::vector<Stage> stages_;
  std::vector<FeatureMap> pooled_input_;
};

/// dense(ReLU) -> dense(linear) -> L2 normalisation.
class EmbeddingHead {
 public:
  EmbeddingHead() = default;
  EmbeddingHead(int in_features, int embed_dim, Rng& rng, const std::string& name);

  Mat infer(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(nn::ParameterList& out);

  /// Test hook: zeroes every weight and bias.
  void zero_weights();

 private:
  nn::Dense hidden_, output_;
  nn::ReLU relu_;
  Mat normalized_;
  Vec norms_;
};

/// Three dense layers (ReLU, ReLU, linear) then L2 normalisation.
class DenseJoint {
 public:
  DenseJoint() = default;
  DenseJoint(int in_features, int embed_dim, Rng& rng, const std::string& name);

  Mat infer(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(nn::ParameterList& out);

 private:
  nn::Dense fc1_, fc2_, fc3_;
  nn::ReLU relu1_, relu2_;
  Mat normalized_;
  Vec norms_;
};

/// Features cut into tokens, shared token projection, one pre-norm encoder
/// block (self-attention + position-wise 2-layer MLP, both residual), flatten,
/// then dense(ReLU) -> dense(linear) -> L2 normalisation.
class JointTransformer {
 public:
  JointTransformer() = default;
  JointTransformer(int in_features, const AVTNetConfig& config, Rng& rng, const std::string& name);

  Mat infer(const Mat& x, std::vector<Mat>* attention = nullptr) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(nn::ParameterList& out);

  int tokens() const { return tokens_; }

 private:
  Mat tokenize(const Mat& x) const;
  Mat flatten(const Mat& tokens, Eigen::Index samples) const;
  Mat unflatten(const Mat& flat) const;
  Mat untokenize(const Mat& tokens, Eigen::Index samples) const;

  int tokens_ = 1;
  int token_width_ = 1;
  int model_width_ = 1;
  nn::Dense projection_;
  nn::LayerNorm norm1_, norm2_;
  nn::MultiHeadSelfAttention attention_;
  nn::Dense ff1_, ff2_;
  nn::ReLU ff_relu_;
  nn::Dense head1_, head2_;
  nn::ReLU head_relu_;
  Mat normalized_;
  Vec norms_;
};

/// Row-aligned batch outputs. Matrices for disabled parts are empty.
struct Embeddings {
  std::array<Mat, 3> features;    // N x feature_dim, indexed by Modality
  std::array<Mat, 3> individual;  // N x embed_dim, unit rows
  Mat joint;                      // N x embed_dim, unit rows
};

/// Per-sample embeddings (e_s, e_c, e_t, e_j); absent parts are empty.
struct EmbeddingBundle {
  Vec audio, visible, thermal, joint;
};

class AVTNet {
 public:
  AVTNet(const AVTNetConfig& config, const Architecture& architecture, std::uint64_t seed);

  Embeddings infer(const std::vector<const data::ModalitySample*>& batch, std::vector<Mat>* attention = nullptr) const;
  Embeddings forward(const std::vector<const data::ModalitySample*>& batch);
  /// Empty matrices mean "no gradient for this output".
  void backward(const std::array<Mat, 3>& d_individual, const Mat& d_joint, const std::array<Mat, 3>& d_features = {});

  EmbeddingBundle embed(const data::ModalitySample& sample) const;

  nn::ParameterList parameters();
  const AVTNetConfig& config() const { return config_; }
  const Architecture& architecture() const { return architecture_; }

  /// Test hook for the zero pre-normalisation probe.
  EmbeddingHead& head(Modality m) { return heads_[data::index_of(m)]; }

 private:
  Mat joint_input(const Embeddings& e) const;
  void check_batch(const std::vector<const data::ModalitySample*>& batch) const;

  AVTNetConfig config_;
  Architecture architecture_;
  std::array<FeatureBranch, 3> branches_;
  std::array<EmbeddingHead, 3> heads_;
  JointTransformer transformer_;
  DenseJoint dense_joint_;
};

/// Concatenates the present embeddings in (audio, visible, thermal, joint) order.
Mat concat_embeddings(const Embeddings& e);
Vec concat_embeddings(const EmbeddingBundle& e);
/// Concatenates the present branch features in (audio, visible, thermal) order.
Mat concat_features(const Embeddings& e);

/// dense + batch-norm + ReLU per hidden width, then a softmax output layer.
class Recognizer {
 public:
  Recognizer() = default;
  Recognizer(int input_width, const std::vector<int>& hidden, int n_classes, std::uint64_t seed,
             const std::string& name = "recognizer");

  Mat logits(const Mat& x) const;
  Mat predict_proba(const Mat& x) const;
  IntVec predict(const Mat& x) const;

  Mat forward(const Mat& x);
  Mat backward(const Mat& d_logits);
  nn::ParameterList parameters();

  int input_width() const { return input_width_; }
  int n_classes() const { return n_classes_; }

 private:
  struct Hidden {
    nn::Dense dense;
    nn::BatchNorm norm;
    nn::ReLU relu;
  };
  int input_width_ = 0;
  int n_classes_ = 0;
  std::vector<Hidden> hidden_;
  nn::Dense output_;
};

/// Class probabilities for one bundle; throws ConfigError on a width mismatch.
Vec recognizer_forward(const Recognizer& recognizer, const EmbeddingBundle& bundle);

}  // namespace avt::model
