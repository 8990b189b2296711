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

#include <string>
#include <vector>

/// Minimal layer library with explicit forward / backward passes.
///
/// Batched dense activations are N x features matrices (one row per sample);
/// convolutional activations are one FeatureMap per sample. `forward` caches
/// what `backward` needs and `backward` accumulates into Parameter::grad;
/// `infer` is the const, cache-free path used at evaluation time.
namespace avt::nn {

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  /// Non-trainable state (batch-norm running statistics) is checkpointed but
  /// never touched by the optimiser.
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Mat v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())), trainable(train) {}
};

using ParameterList = std::vector<Parameter*>;

void zero_grad(const ParameterList& params);
double gradient_norm(const ParameterList& params);

/// Glorot-uniform initialiser (the Keras default).
Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, int fan_in, int fan_out, Rng& rng);

class Dense {
 public:
  Dense() = default;
  Dense(int in_features, int out_features, const std::string& name, Rng& rng);

  Mat infer(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(ParameterList& out);

  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }

  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

 private:
  Mat input_;
};

class ReLU {
 public:
  static Mat infer(const Mat& x) { return x.cwiseMax(0.0); }
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy) const;

 private:
  Mat mask_;
};

enum class Activation { Linear, ReLU };

/// Valid (unpadded), stride-1 convolution over channels-first maps via im2col.
/// A 1-D convolution is a 1 x k kernel on height-1 maps.
class Conv2D {
 public:
  Conv2D() = default;
  Conv2D(int in_channels, int out_channels, int kernel_h, int kernel_w, Activation activation,
         const std::string& name, Rng& rng);

  FeatureMap infer(const FeatureMap& x) const;
  std::vector<FeatureMap> forward(const std::vector<FeatureMap>& x);
  /// Returns input gradients only when `input_grad` is set.
  std::vector<FeatureMap> backward(const std::vector<FeatureMap>& dy, bool input_grad);
  void collect(ParameterList& out);

  int out_channels() const { return static_cast<int>(weight.value.rows()); }

  Parameter weight;  // out x (in * kh * kw)
  Parameter bias;    // out x 1

 private:
  RowMat im2col(const FeatureMap& x) const;
  FeatureMap apply(const FeatureMap& x, const RowMat& cols) const;

  int in_channels_ = 0;
  int kernel_h_ = 1;
  int kernel_w_ = 1;
  Activation activation_ = Activation::Linear;
  std::vector<RowMat> cols_;
  std::vector<FeatureMap> outputs_;
  std::vector<std::pair<int, int>> input_hw_;
};

/// 2x2 max pooling with stride 2 (floor on odd sizes).
class MaxPool2D {
 public:
  static FeatureMap infer(const FeatureMap& x);
  std::vector<FeatureMap> forward(const std::vector<FeatureMap>& x);
  std::vector<FeatureMap> backward(const std::vector<FeatureMap>& dy) const;

 private:
  std::vector<std::vector<int>> argmax_;
  std::vector<FeatureMap> input_shape_;
};

/// Mean over spatial positions: one row of `channels` values per sample.
Mat global_average_pool(const std::vector<FeatureMap>& x);
RowVec global_average_pool(const FeatureMap& x);
std::vector<FeatureMap> global_average_pool_backward(const Mat& dy, const std::vector<FeatureMap>& shapes);

/// Row-wise layer normalisation with learned scale and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(int features, const std::string& name, double epsilon = 1e-6);

  Mat infer(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(ParameterList& out);

  Parameter gamma, beta;

 private:
  double epsilon_ = 1e-6;
  Mat xhat_;
  Vec inv_std_;
};

/// Multi-head self-attention over groups of `tokens` consecutive rows.
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(int model_width, int heads, const std::string& name, Rng& rng);

  /// `attention`, when given, receives one tokens x tokens matrix per (sample, head).
  Mat infer(const Mat& x, int tokens, std::vector<Mat>* attention = nullptr) const;
  Mat forward(const Mat& x, int tokens);
  Mat backward(const Mat& dy);
  void collect(ParameterList& out);

  int heads() const { return heads_; }

 private:
  Mat attend(const Mat& q, const Mat& k, const Mat& v, int tokens, std::vector<Mat>* attention) const;

  int heads_ = 1;
  int head_width_ = 1;
  int tokens_ = 1;
  Dense query_, key_, value_, output_;
  Mat q_, k_, v_;
  std::vector<Mat> attention_;
};

/// Batch normalisation over the batch axis of an N x features matrix.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(int features, const std::string& name, double momentum = 0.9, double epsilon = 1e-3);

  Mat infer(const Mat& x) const;
  /// Normalises with batch statistics and updates the running estimates.
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(ParameterList& out);

  Parameter gamma, beta, running_mean, running_var;

 private:
  double momentum_ = 0.9;
  double epsilon_ = 1e-3;
  Mat xhat_;
  RowVec inv_std_;
};

/// x / sqrt(||x||^2 + eps) per row.
Mat l2_normalize(const Mat& x, Vec* norms = nullptr, double epsilon = 1e-12);
Mat l2_normalize_backward(const Mat& y, const Vec& norms, const Mat& dy);

Mat softmax(const Mat& logits);
/// Mean sparse categorical cross-entropy; `grad` receives d loss / d logits.
double softmax_cross_entropy(const Mat& logits, const IntVec& labels, Mat* grad = nullptr);

/// Adam with bias-corrected step size, matching the Keras update rule.
class Adam {
 public:
  Adam(ParameterList params, double learning_rate = 1e-3, double beta1 = 0.5, double beta2 = 0.99,
       double epsilon = 1e-7);

  void step();
  void zero_grad() const { nn::zero_grad(params_); }

  long long iterations() const { return step_; }
  /// Optimiser moments, parallel to the trainable parameters, for checkpointing.
  std::vector<Parameter> state() const;
  void load_state(const std::vector<Parameter>& state, long long iterations);

 private:
  ParameterList params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  long long step_ = 0;
};

}  // namespace avt::nn
