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

#include "avt/nn.hpp"

#include "avt/errors.hpp"

#include <cmath>
#include <map>

namespace avt::nn {

void zero_grad(const ParameterList& params) {
  for (Parameter* p : params) p->grad.setZero();
}

double gradient_norm(const ParameterList& params) {
  double sq = 0.0;
  for (const Parameter* p : params)
    if (p->trainable) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat w(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = dist(rng);
  return w;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(int in_features, int out_features, const std::string& name, Rng& rng)
    : weight(name + ".weight", glorot_uniform(in_features, out_features, in_features, out_features, rng)),
      bias(name + ".bias", Mat::Zero(1, out_features)) {}

Mat Dense::infer(const Mat& x) const {
  if (x.cols() != weight.value.rows())
    throw InputError(weight.name + ": expected " + std::to_string(weight.value.rows()) + " input features, got " +
                     std::to_string(x.cols()));
  Mat y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Dense::forward(const Mat& x) {
  input_ = x;
  return infer(x);
}

Mat Dense::backward(const Mat& dy) {
  weight.grad.noalias() += input_.transpose() * dy;
  bias.grad += dy.colwise().sum();
  return dy * weight.value.transpose();
}

void Dense::collect(ParameterList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Mat ReLU::forward(const Mat& x) {
  mask_ = (x.array() > 0.0).cast<double>().matrix();
  return x.cwiseProduct(mask_);
}

Mat ReLU::backward(const Mat& dy) const { return dy.cwiseProduct(mask_); }

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(int in_channels, int out_channels, int kernel_h, int kernel_w, Activation activation,
               const std::string& name, Rng& rng)
    : weight(name + ".weight", glorot_uniform(out_channels, in_channels * kernel_h * kernel_w,
                                              in_channels * kernel_h * kernel_w, out_channels * kernel_h * kernel_w,
                                              rng)),
      bias(name + ".bias", Mat::Zero(out_channels, 1)),
      in_channels_(in_channels),
      kernel_h_(kernel_h),
      kernel_w_(kernel_w),
      activation_(activation) {}

RowMat Conv2D::im2col(const FeatureMap& x) const {
  if (x.channels() != in_channels_)
    throw InputError(weight.name + ": expected " + std::to_string(in_channels_) + " channels, got " +
                     std::to_string(x.channels()));
  const int out_h = x.height - kernel_h_ + 1;
  const int out_w = x.width - kernel_w_ + 1;
  if (out_h < 1 || out_w < 1) throw InputError(weight.name + ": input smaller than the kernel");
  RowMat cols(static_cast<Eigen::Index>(in_channels_) * kernel_h_ * kernel_w_, out_h * out_w);
  for (int c = 0; c < in_channels_; ++c)
    for (int ky = 0; ky < kernel_h_; ++ky)
      for (int kx = 0; kx < kernel_w_; ++kx) {
        const Eigen::Index r = (static_cast<Eigen::Index>(c) * kernel_h_ + ky) * kernel_w_ + kx;
        for (int oy = 0; oy < out_h; ++oy)
          cols.row(r).segment(oy * out_w, out_w) = x.data.row(c).segment((oy + ky) * x.width + kx, out_w);
      }
  return cols;
}

FeatureMap Conv2D::apply(const FeatureMap& x, const RowMat& cols) const {
  FeatureMap y;
  y.height = x.height - kernel_h_ + 1;
  y.width = x.width - kernel_w_ + 1;
  y.data.noalias() = weight.value * cols;
  y.data.colwise() += bias.value.col(0);
  if (activation_ == Activation::ReLU) y.data = y.data.cwiseMax(0.0);
  return y;
}

FeatureMap Conv2D::infer(const FeatureMap& x) const { return apply(x, im2col(x)); }

std::vector<FeatureMap> Conv2D::forward(const std::vector<FeatureMap>& x) {
  cols_.resize(x.size());
  outputs_.resize(x.size());
  input_hw_.resize(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    cols_[n] = im2col(x[n]);
    outputs_[n] = apply(x[n], cols_[n]);
    input_hw_[n] = {x[n].height, x[n].width};
  }
  return outputs_;
}

std::vector<FeatureMap> Conv2D::backward(const std::vector<FeatureMap>& dy, bool input_grad) {
  std::vector<FeatureMap> dx;
  if (input_grad) dx.resize(dy.size());
  for (std::size_t n = 0; n < dy.size(); ++n) {
    RowMat g = dy[n].data;
    if (activation_ == Activation::ReLU) g = g.cwiseProduct((outputs_[n].data.array() > 0.0).cast<double>().matrix());
    weight.grad.noalias() += g * cols_[n].transpose();
    bias.grad += g.rowwise().sum();
    if (!input_grad) continue;

    const RowMat dcols = weight.value.transpose() * g;
    const auto [h, w] = input_hw_[n];
    const int out_h = h - kernel_h_ + 1;
    const int out_w = w - kernel_w_ + 1;
    FeatureMap d(in_channels_, h, w);
    for (int c = 0; c < in_channels_; ++c)
      for (int ky = 0; ky < kernel_h_; ++ky)
        for (int kx = 0; kx < kernel_w_; ++kx) {
          const Eigen::Index r = (static_cast<Eigen::Index>(c) * kernel_h_ + ky) * kernel_w_ + kx;
          for (int oy = 0; oy < out_h; ++oy)
            d.data.row(c).segment((oy + ky) * w + kx, out_w) += dcols.row(r).segment(oy * out_w, out_w);
        }
    dx[n] = std::move(d);
  }
  return dx;
}

void Conv2D::collect(ParameterList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------- pooling

namespace {

FeatureMap max_pool(const FeatureMap& x, std::vector<int>* argmax) {
  const int out_h = x.height / 2;
  const int out_w = x.width / 2;
  if (out_h < 1 || out_w < 1) throw InputError("MaxPool2D: input smaller than the 2x2 window");
  FeatureMap y(x.channels(), out_h, out_w);
  if (argmax) argmax->assign(static_cast<std::size_t>(x.channels()) * out_h * out_w, 0);
  for (int c = 0; c < x.channels(); ++c) {
    const double* src = x.data.row(c).data();
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        int best = (2 * oy) * x.width + 2 * ox;
        for (const int off : {1, x.width, x.width + 1})
          if (src[(2 * oy) * x.width + 2 * ox + off] > src[best]) best = (2 * oy) * x.width + 2 * ox + off;
        y.data(c, oy * out_w + ox) = src[best];
        if (argmax) (*argmax)[(static_cast<std::size_t>(c) * out_h + oy) * out_w + ox] = best;
      }
  }
  return y;
}

}  // namespace

FeatureMap MaxPool2D::infer(const FeatureMap& x) { return max_pool(x, nullptr); }

std::vector<FeatureMap> MaxPool2D::forward(const std::vector<FeatureMap>& x) {
  std::vector<FeatureMap> y(x.size());
  argmax_.resize(x.size());
  input_shape_.resize(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = max_pool(x[n], &argmax_[n]);
    input_shape_[n] = FeatureMap();
    input_shape_[n].height = x[n].height;
    input_shape_[n].width = x[n].width;
  }
  return y;
}

std::vector<FeatureMap> MaxPool2D::backward(const std::vector<FeatureMap>& dy) const {
  std::vector<FeatureMap> dx(dy.size());
  for (std::size_t n = 0; n < dy.size(); ++n) {
    const int channels = dy[n].channels();
    const int per_channel = dy[n].height * dy[n].width;
    dx[n] = FeatureMap(channels, input_shape_[n].height, input_shape_[n].width);
    for (int c = 0; c < channels; ++c)
      for (int p = 0; p < per_channel; ++p)
        dx[n].data(c, argmax_[n][static_cast<std::size_t>(c) * per_channel + p]) += dy[n].data(c, p);
  }
  return dx;
}

RowVec global_average_pool(const FeatureMap& x) { return x.data.rowwise().mean().transpose(); }

Mat global_average_pool(const std::vector<FeatureMap>& x) {
  if (x.empty()) return {};
  Mat out(static_cast<Eigen::Index>(x.size()), x.front().channels());
  for (std::size_t n = 0; n < x.size(); ++n) out.row(static_cast<Eigen::Index>(n)) = global_average_pool(x[n]);
  return out;
}

std::vector<FeatureMap> global_average_pool_backward(const Mat& dy, const std::vector<FeatureMap>& shapes) {
  std::vector<FeatureMap> dx(shapes.size());
  for (std::size_t n = 0; n < shapes.size(); ++n) {
    const int positions = shapes[n].height * shapes[n].width;
    dx[n] = FeatureMap(shapes[n].channels(), shapes[n].height, shapes[n].width);
    for (int c = 0; c < shapes[n].channels(); ++c)
      dx[n].data.row(c).setConstant(dy(static_cast<Eigen::Index>(n), c) / positions);
  }
  return dx;
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(int features, const std::string& name, double epsilon)
    : gamma(name + ".gamma", Mat::Ones(1, features)), beta(name + ".beta", Mat::Zero(1, features)), epsilon_(epsilon) {}

Mat LayerNorm::infer(const Mat& x) const {
  const Vec mean = x.rowwise().mean();
  const Mat centred = x.colwise() - mean;
  const Vec inv_std = ((centred.array().square().rowwise().mean()) + epsilon_).rsqrt();
  Mat y = centred.array().colwise() * inv_std.array();
  y = y.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat LayerNorm::forward(const Mat& x) {
  const Vec mean = x.rowwise().mean();
  const Mat centred = x.colwise() - mean;
  inv_std_ = ((centred.array().square().rowwise().mean()) + epsilon_).rsqrt();
  xhat_ = centred.array().colwise() * inv_std_.array();
  Mat y = xhat_.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat LayerNorm::backward(const Mat& dy) {
  gamma.grad += dy.cwiseProduct(xhat_).colwise().sum();
  beta.grad += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  const Vec mean_d = dxhat.rowwise().mean();
  const Vec mean_dx = dxhat.cwiseProduct(xhat_).rowwise().mean();
  Mat dx = dxhat.colwise() - mean_d;
  dx -= (xhat_.array().colwise() * mean_dx.array()).matrix();
  return dx.array().colwise() * inv_std_.array();
}

void LayerNorm::collect(ParameterList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------- attention

MultiHeadSelfAttention::MultiHeadSelfAttention(int model_width, int heads, const std::string& name, Rng& rng)
    : heads_(heads),
      head_width_(model_width / heads),
      query_(model_width, model_width, name + ".query", rng),
      key_(model_width, model_width, name + ".key", rng),
      value_(model_width, model_width, name + ".value", rng),
      output_(model_width, model_width, name + ".output", rng) {
  if (heads < 1 || model_width % heads != 0)
    throw ConfigError(name + ": model width must be divisible by the head count");
}

Mat MultiHeadSelfAttention::attend(const Mat& q, const Mat& k, const Mat& v, int tokens,
                                   std::vector<Mat>* attention) const {
  if (tokens < 1 || q.rows() % tokens != 0) throw InputError("attention: rows are not a multiple of the token count");
  const Eigen::Index samples = q.rows() / tokens;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_width_));
  Mat out(q.rows(), q.cols());
  if (attention) attention->clear();
  for (Eigen::Index n = 0; n < samples; ++n) {
    for (int h = 0; h < heads_; ++h) {
      const auto qh = q.block(n * tokens, h * head_width_, tokens, head_width_);
      const auto kh = k.block(n * tokens, h * head_width_, tokens, head_width_);
      const auto vh = v.block(n * tokens, h * head_width_, tokens, head_width_);
      Mat a = softmax((qh * kh.transpose()) * scale);
      out.block(n * tokens, h * head_width_, tokens, head_width_) = a * vh;
      if (attention) attention->push_back(std::move(a));
    }
  }
  return out;
}

Mat MultiHeadSelfAttention::infer(const Mat& x, int tokens, std::vector<Mat>* attention) const {
  return output_.infer(attend(query_.infer(x), key_.infer(x), value_.infer(x), tokens, attention));
}

Mat MultiHeadSelfAttention::forward(const Mat& x, int tokens) {
  tokens_ = tokens;
  q_ = query_.forward(x);
  k_ = key_.forward(x);
  v_ = value_.forward(x);
  return output_.forward(attend(q_, k_, v_, tokens, &attention_));
}

Mat MultiHeadSelfAttention::backward(const Mat& dy) {
  const Mat d_att = output_.backward(dy);
  const Eigen::Index samples = q_.rows() / tokens_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_width_));
  Mat dq = Mat::Zero(q_.rows(), q_.cols());
  Mat dk = Mat::Zero(k_.rows(), k_.cols());
  Mat dv = Mat::Zero(v_.rows(), v_.cols());
  std::size_t idx = 0;
  for (Eigen::Index n = 0; n < samples; ++n) {
    for (int h = 0; h < heads_; ++h, ++idx) {
      const Mat& a = attention_[idx];
      const auto rows = n * tokens_;
      const auto cols = h * head_width_;
      const Mat doh = d_att.block(rows, cols, tokens_, head_width_);
      const Mat qh = q_.block(rows, cols, tokens_, head_width_);
      const Mat kh = k_.block(rows, cols, tokens_, head_width_);
      const Mat vh = v_.block(rows, cols, tokens_, head_width_);
      const Mat da = doh * vh.transpose();
      dv.block(rows, cols, tokens_, head_width_) = a.transpose() * doh;
      const Vec row_dot = a.cwiseProduct(da).rowwise().sum();
      const Mat ds = a.cwiseProduct(da.colwise() - row_dot) * scale;
      dq.block(rows, cols, tokens_, head_width_) = ds * kh;
      dk.block(rows, cols, tokens_, head_width_) = ds.transpose() * qh;
    }
  }
  return query_.backward(dq) + key_.backward(dk) + value_.backward(dv);
}

void MultiHeadSelfAttention::collect(ParameterList& out) {
  query_.collect(out);
  key_.collect(out);
  value_.collect(out);
  output_.collect(out);
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int features, const std::string& name, double momentum, double epsilon)
    : gamma(name + ".gamma", Mat::Ones(1, features)),
      beta(name + ".beta", Mat::Zero(1, features)),
      running_mean(name + ".running_mean", Mat::Zero(1, features), false),
      running_var(name + ".running_var", Mat::Ones(1, features), false),
      momentum_(momentum),
      epsilon_(epsilon) {}

Mat BatchNorm::infer(const Mat& x) const {
  const RowVec inv_std = (running_var.value.row(0).array() + epsilon_).rsqrt();
  Mat y = (x.rowwise() - running_mean.value.row(0)).array().rowwise() * (inv_std.array() * gamma.value.row(0).array());
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat BatchNorm::forward(const Mat& x) {
  const RowVec mean = x.colwise().mean();
  const Mat centred = x.rowwise() - mean;
  const RowVec var = centred.array().square().colwise().mean();
  inv_std_ = (var.array() + epsilon_).rsqrt();
  xhat_ = centred.array().rowwise() * inv_std_.array();
  running_mean.value = momentum_ * running_mean.value + (1.0 - momentum_) * Mat(mean);
  running_var.value = momentum_ * running_var.value + (1.0 - momentum_) * Mat(var);
  Mat y = xhat_.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat BatchNorm::backward(const Mat& dy) {
  gamma.grad += dy.cwiseProduct(xhat_).colwise().sum();
  beta.grad += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  const RowVec mean_d = dxhat.colwise().mean();
  const RowVec mean_dx = dxhat.cwiseProduct(xhat_).colwise().mean();
  Mat dx = dxhat.rowwise() - mean_d;
  dx -= (xhat_.array().rowwise() * mean_dx.array()).matrix();
  return dx.array().rowwise() * inv_std_.array();
}

void BatchNorm::collect(ParameterList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

// ---------------------------------------------------------------- heads

Mat l2_normalize(const Mat& x, Vec* norms, double epsilon) {
  const Vec n = (x.rowwise().squaredNorm().array() + epsilon).sqrt();
  if (norms) *norms = n;
  return x.array().colwise() / n.array();
}

Mat l2_normalize_backward(const Mat& y, const Vec& norms, const Mat& dy) {
  const Vec dot = y.cwiseProduct(dy).rowwise().sum();
  const Mat projected = dy - (y.array().colwise() * dot.array()).matrix();
  return projected.array().colwise() / norms.array();
}

Mat softmax(const Mat& logits) {
  Mat e = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
  return e.array().colwise() / e.rowwise().sum().array();
}

double softmax_cross_entropy(const Mat& logits, const IntVec& labels, Mat* grad) {
  if (labels.size() != logits.rows()) throw InputError("softmax_cross_entropy: label count differs from batch size");
  const Mat p = softmax(logits);
  const auto n = static_cast<double>(logits.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (labels(i) < 0 || labels(i) >= logits.cols()) throw InputError("softmax_cross_entropy: label out of range");
    loss -= std::log(std::max(p(i, labels(i)), 1e-300));
  }
  if (grad) {
    *grad = p;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) (*grad)(i, labels(i)) -= 1.0;
    *grad /= n;
  }
  return loss / n;
}

// ---------------------------------------------------------------- Adam

Adam::Adam(ParameterList params, double learning_rate, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const Parameter* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++step_;
  const double t = static_cast<double>(step_);
  const double lr_t = lr_ * std::sqrt(1.0 - std::pow(beta2_, t)) / (1.0 - std::pow(beta1_, t));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_t * m_[i].array() / (v_[i].array().sqrt() + epsilon_);
  }
}

std::vector<Parameter> Adam::state() const {
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("adam.m/" + params_[i]->name, m_[i], false);
    out.emplace_back("adam.v/" + params_[i]->name, v_[i], false);
  }
  return out;
}

void Adam::load_state(const std::vector<Parameter>& state, long long iterations) {
  std::map<std::string, const Mat*> by_name;
  for (const auto& p : state) by_name[p.name] = &p.value;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto m = by_name.find("adam.m/" + params_[i]->name);
    const auto v = by_name.find("adam.v/" + params_[i]->name);
    if (m == by_name.end() || v == by_name.end())
      throw ConfigError("optimiser state lacks moments for " + params_[i]->name);
    m_[i] = *m->second;
    v_[i] = *v->second;
  }
  step_ = iterations;
}

}  // namespace avt::nn
