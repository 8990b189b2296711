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

#include <algorithm>
#include <random>
#include <string>

namespace avt::model {
namespace {

constexpr double kHeadBiasScale = 0.05;

std::string dims(const FeatureMap& m) {
  return std::to_string(m.channels()) + "x" + std::to_string(m.height) + "x" + std::to_string(m.width);
}

FeatureMap expected_shape(Modality m, const data::InputShape& shape) { return data::zero_tensor(m, shape); }

}  // namespace

// ---------------------------------------------------------------- config

AVTNetConfig AVTNetConfig::full(int n_classes) {
  AVTNetConfig c;
  c.n_classes = n_classes;
  return c;
}

AVTNetConfig AVTNetConfig::toy(int n_classes) {
  AVTNetConfig c;
  c.input = data::InputShape::toy();
  c.audio_filters = {32, 32, 64};
  c.image_filters = {16, 16, 16};
  c.n_classes = n_classes;
  return c;
}

void AVTNetConfig::validate() const {
  const auto positive = [](const std::vector<int>& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](int x) { return x > 0; });
  };
  if (!positive(audio_filters) || !positive(image_filters) || !positive(recognizer_hidden))
    throw ConfigError("AVTNetConfig: layer sizes must be positive");
  if (audio_filters.back() != feature_dim)
    throw ConfigError("AVTNetConfig: the last audio conv layer must have feature_dim filters");
  if (feature_dim < 1 || embed_dim < 1 || model_width < 1 || transformer_hidden < 1 || audio_kernel < 1)
    throw ConfigError("AVTNetConfig: layer sizes must be positive");
  if (transformer_heads < 1 || model_width % transformer_heads != 0)
    throw ConfigError("AVTNetConfig: model_width must be divisible by transformer_heads");
  if (token_width < 0) throw ConfigError("AVTNetConfig: token_width must be non-negative");
  if (n_classes < 2) throw ConfigError("AVTNetConfig: n_classes must be at least 2");
}

io::KeyValueConfig AVTNetConfig::to_kv() const {
  io::KeyValueConfig kv;
  kv.set("model.n_mels", input.n_mels);
  kv.set("model.n_frames", input.n_frames);
  kv.set("model.image_size", input.image_size);
  kv.set("model.visible_channels", input.visible_channels);
  kv.set("model.thermal_channels", input.thermal_channels);
  kv.set("model.audio_filters", io::join_ints(audio_filters));
  kv.set("model.audio_kernel", audio_kernel);
  kv.set("model.image_filters", io::join_ints(image_filters));
  kv.set("model.feature_dim", feature_dim);
  kv.set("model.embed_dim", embed_dim);
  kv.set("model.transformer_heads", transformer_heads);
  kv.set("model.model_width", model_width);
  kv.set("model.transformer_hidden", transformer_hidden);
  kv.set("model.token_width", token_width);
  kv.set("model.recognizer_hidden", io::join_ints(recognizer_hidden));
  kv.set("model.n_classes", n_classes);
  return kv;
}

AVTNetConfig AVTNetConfig::from_kv(const io::KeyValueConfig& kv) {
  AVTNetConfig c;
  const auto i = [&](const char* key, int fallback) { return static_cast<int>(kv.get_int(key, fallback)); };
  c.input.n_mels = i("model.n_mels", c.input.n_mels);
  c.input.n_frames = i("model.n_frames", c.input.n_frames);
  c.input.image_size = i("model.image_size", c.input.image_size);
  c.input.visible_channels = i("model.visible_channels", c.input.visible_channels);
  c.input.thermal_channels = i("model.thermal_channels", c.input.thermal_channels);
  c.audio_filters = kv.get_int_list("model.audio_filters", c.audio_filters);
  c.audio_kernel = i("model.audio_kernel", c.audio_kernel);
  c.image_filters = kv.get_int_list("model.image_filters", c.image_filters);
  c.feature_dim = i("model.feature_dim", c.feature_dim);
  c.embed_dim = i("model.embed_dim", c.embed_dim);
  c.transformer_heads = i("model.transformer_heads", c.transformer_heads);
  c.model_width = i("model.model_width", c.model_width);
  c.transformer_hidden = i("model.transformer_hidden", c.transformer_hidden);
  c.token_width = i("model.token_width", c.token_width);
  c.recognizer_hidden = kv.get_int_list("model.recognizer_hidden", c.recognizer_hidden);
  c.n_classes = i("model.n_classes", c.n_classes);
  c.validate();
  return c;
}

int Architecture::enabled_count() const {
  return static_cast<int>(std::count(modalities.begin(), modalities.end(), true));
}

// ---------------------------------------------------------------- branches

FeatureBranch FeatureBranch::audio(const AVTNetConfig& config, Rng& rng, const std::string& name) {
  FeatureBranch b;
  int channels = config.input.n_mels;
  for (std::size_t l = 0; l < config.audio_filters.size(); ++l) {
    Stage s;
    s.conv = nn::Conv2D(channels, config.audio_filters[l], 1, config.audio_kernel, nn::Activation::ReLU,
                        name + ".conv" + std::to_string(l), rng);
    channels = config.audio_filters[l];
    b.stages_.push_back(std::move(s));
  }
  return b;
}

FeatureBranch FeatureBranch::image(int channels, const AVTNetConfig& config, Rng& rng, const std::string& name) {
  FeatureBranch b;
  for (std::size_t l = 0; l < config.image_filters.size(); ++l) {
    Stage s;
    s.conv = nn::Conv2D(channels, config.image_filters[l], 3, 3, nn::Activation::ReLU,
                        name + ".conv" + std::to_string(l), rng);
    s.pool = true;
    channels = config.image_filters[l];
    b.stages_.push_back(std::move(s));
  }
  Stage last;
  last.conv = nn::Conv2D(channels, config.feature_dim, 1, 1, nn::Activation::ReLU,
                         name + ".conv" + std::to_string(config.image_filters.size()), rng);
  b.stages_.push_back(std::move(last));
  return b;
}

RowVec FeatureBranch::infer(const FeatureMap& x) const {
  FeatureMap h = x;
  for (const auto& s : stages_) {
    h = s.conv.infer(h);
    if (s.pool) h = nn::MaxPool2D::infer(h);
  }
  return nn::global_average_pool(h);
}

Mat FeatureBranch::forward(const std::vector<FeatureMap>& batch) {
  std::vector<FeatureMap> h = batch;
  for (auto& s : stages_) {
    h = s.conv.forward(h);
    if (s.pool) h = s.pooler.forward(h);
  }
  pooled_input_ = h;
  return nn::global_average_pool(h);
}

void FeatureBranch::backward(const Mat& d_features) {
  std::vector<FeatureMap> g = nn::global_average_pool_backward(d_features, pooled_input_);
  for (std::size_t l = stages_.size(); l-- > 0;) {
    auto& s = stages_[l];
    if (s.pool) g = s.pooler.backward(g);
    g = s.conv.backward(g, l > 0);
  }
}

void FeatureBranch::collect(nn::ParameterList& out) {
  for (auto& s : stages_) s.conv.collect(out);
}

// ---------------------------------------------------------------- heads

EmbeddingHead::EmbeddingHead(int in_features, int embed_dim, Rng& rng, const std::string& name)
    : hidden_(in_features, embed_dim, name + ".dense0", rng), output_(embed_dim, embed_dim, name + ".dense1", rng) {
  // small random bias: a zero input maps to a unit-norm e^m
  std::uniform_real_distribution<double> u(-kHeadBiasScale, kHeadBiasScale);
  for (Eigen::Index j = 0; j < output_.bias.value.cols(); ++j) output_.bias.value(0, j) = u(rng);
}

Mat EmbeddingHead::infer(const Mat& x) const {
  return nn::l2_normalize(output_.infer(nn::ReLU::infer(hidden_.infer(x))));
}

Mat EmbeddingHead::forward(const Mat& x) {
  normalized_ = nn::l2_normalize(output_.forward(relu_.forward(hidden_.forward(x))), &norms_);
  return normalized_;
}

Mat EmbeddingHead::backward(const Mat& dy) {
  return hidden_.backward(relu_.backward(output_.backward(nn::l2_normalize_backward(normalized_, norms_, dy))));
}

void EmbeddingHead::collect(nn::ParameterList& out) {
  hidden_.collect(out);
  output_.collect(out);
}

void EmbeddingHead::zero_weights() {
  for (nn::Dense* d : {&hidden_, &output_}) {
    d->weight.value.setZero();
    d->bias.value.setZero();
  }
}

DenseJoint::DenseJoint(int in_features, int embed_dim, Rng& rng, const std::string& name)
    : fc1_(in_features, embed_dim, name + ".dense0", rng),
      fc2_(embed_dim, embed_dim, name + ".dense1", rng),
      fc3_(embed_dim, embed_dim, name + ".dense2", rng) {}

Mat DenseJoint::infer(const Mat& x) const {
  return nn::l2_normalize(fc3_.infer(nn::ReLU::infer(fc2_.infer(nn::ReLU::infer(fc1_.infer(x))))));
}

Mat DenseJoint::forward(const Mat& x) {
  normalized_ = nn::l2_normalize(fc3_.forward(relu2_.forward(fc2_.forward(relu1_.forward(fc1_.forward(x))))), &norms_);
  return normalized_;
}

Mat DenseJoint::backward(const Mat& dy) {
  const Mat g = fc3_.backward(nn::l2_normalize_backward(normalized_, norms_, dy));
  return fc1_.backward(relu1_.backward(fc2_.backward(relu2_.backward(g))));
}

void DenseJoint::collect(nn::ParameterList& out) {
  fc1_.collect(out);
  fc2_.collect(out);
  fc3_.collect(out);
}

// ---------------------------------------------------------------- transformer

JointTransformer::JointTransformer(int in_features, const AVTNetConfig& config, Rng& rng, const std::string& name)
    : token_width_(config.token_width > 0 ? config.token_width : config.feature_dim), model_width_(config.model_width) {
  if (in_features % token_width_ != 0)
    throw ConfigError(name + ": concatenated feature width is not a multiple of the token width");
  tokens_ = in_features / token_width_;
  projection_ = nn::Dense(token_width_, model_width_, name + ".projection", rng);
  norm1_ = nn::LayerNorm(model_width_, name + ".norm1");
  attention_ = nn::MultiHeadSelfAttention(model_width_, config.transformer_heads, name + ".attention", rng);
  norm2_ = nn::LayerNorm(model_width_, name + ".norm2");
  ff1_ = nn::Dense(model_width_, config.transformer_hidden, name + ".ff0", rng);
  ff2_ = nn::Dense(config.transformer_hidden, model_width_, name + ".ff1", rng);
  head1_ = nn::Dense(tokens_ * model_width_, config.embed_dim, name + ".dense0", rng);
  head2_ = nn::Dense(config.embed_dim, config.embed_dim, name + ".dense1", rng);
}

Mat JointTransformer::tokenize(const Mat& x) const {
  Mat out(x.rows() * tokens_, token_width_);
  for (Eigen::Index n = 0; n < x.rows(); ++n)
    for (int t = 0; t < tokens_; ++t) out.row(n * tokens_ + t) = x.row(n).segment(t * token_width_, token_width_);
  return out;
}

Mat JointTransformer::untokenize(const Mat& tokens, Eigen::Index samples) const {
  Mat out(samples, tokens_ * token_width_);
  for (Eigen::Index n = 0; n < samples; ++n)
    for (int t = 0; t < tokens_; ++t) out.row(n).segment(t * token_width_, token_width_) = tokens.row(n * tokens_ + t);
  return out;
}

Mat JointTransformer::flatten(const Mat& tokens, Eigen::Index samples) const {
  Mat out(samples, tokens_ * model_width_);
  for (Eigen::Index n = 0; n < samples; ++n)
    for (int t = 0; t < tokens_; ++t) out.row(n).segment(t * model_width_, model_width_) = tokens.row(n * tokens_ + t);
  return out;
}

Mat JointTransformer::unflatten(const Mat& flat) const {
  Mat out(flat.rows() * tokens_, model_width_);
  for (Eigen::Index n = 0; n < flat.rows(); ++n)
    for (int t = 0; t < tokens_; ++t) out.row(n * tokens_ + t) = flat.row(n).segment(t * model_width_, model_width_);
  return out;
}

Mat JointTransformer::infer(const Mat& x, std::vector<Mat>* attention) const {
  const Mat h0 = projection_.infer(tokenize(x));
  const Mat h1 = h0 + attention_.infer(norm1_.infer(h0), tokens_, attention);
  const Mat h2 = h1 + ff2_.infer(nn::ReLU::infer(ff1_.infer(norm2_.infer(h1))));
  return nn::l2_normalize(head2_.infer(nn::ReLU::infer(head1_.infer(flatten(h2, x.rows())))));
}

Mat JointTransformer::forward(const Mat& x) {
  const Mat h0 = projection_.forward(tokenize(x));
  const Mat h1 = h0 + attention_.forward(norm1_.forward(h0), tokens_);
  const Mat h2 = h1 + ff2_.forward(ff_relu_.forward(ff1_.forward(norm2_.forward(h1))));
  normalized_ = nn::l2_normalize(head2_.forward(head_relu_.forward(head1_.forward(flatten(h2, x.rows())))), &norms_);
  return normalized_;
}

Mat JointTransformer::backward(const Mat& dy) {
  const Eigen::Index samples = dy.rows();
  const Mat dz = nn::l2_normalize_backward(normalized_, norms_, dy);
  const Mat dh2 = unflatten(head1_.backward(head_relu_.backward(head2_.backward(dz))));
  const Mat dh1 = dh2 + norm2_.backward(ff1_.backward(ff_relu_.backward(ff2_.backward(dh2))));
  const Mat dh0 = dh1 + norm1_.backward(attention_.backward(dh1));
  return untokenize(projection_.backward(dh0), samples);
}

void JointTransformer::collect(nn::ParameterList& out) {
  projection_.collect(out);
  norm1_.collect(out);
  attention_.collect(out);
  norm2_.collect(out);
  ff1_.collect(out);
  ff2_.collect(out);
  head1_.collect(out);
  head2_.collect(out);
}

// ---------------------------------------------------------------- AVTNet

AVTNet::AVTNet(const AVTNetConfig& config, const Architecture& architecture, std::uint64_t seed)
    : config_(config), architecture_(architecture) {
  config_.validate();
  if (architecture_.enabled_count() == 0) throw ConfigError("AVTNet: at least one modality must be enabled");
  Rng rng(seed);
  if (architecture_.enabled(Modality::Audio))
    branches_[data::index_of(Modality::Audio)] = FeatureBranch::audio(config_, rng, "audio_branch");
  if (architecture_.enabled(Modality::Visible))
    branches_[data::index_of(Modality::Visible)] =
        FeatureBranch::image(config_.input.visible_channels, config_, rng, "visible_branch");
  if (architecture_.enabled(Modality::Thermal))
    branches_[data::index_of(Modality::Thermal)] =
        FeatureBranch::image(config_.input.thermal_channels, config_, rng, "thermal_branch");
  if (architecture_.individual) {
    for (Modality m : data::kModalities)
      if (architecture_.enabled(m))
        heads_[data::index_of(m)] =
            EmbeddingHead(config_.feature_dim, config_.embed_dim, rng, std::string(data::modality_name(m)) + "_head");
  }
  const int joint_in = architecture_.enabled_count() * config_.feature_dim;
  if (architecture_.joint == JointKind::Transformer) transformer_ = JointTransformer(joint_in, config_, rng, "joint");
  if (architecture_.joint == JointKind::Dense) dense_joint_ = DenseJoint(joint_in, config_.embed_dim, rng, "joint");
}

void AVTNet::check_batch(const std::vector<const data::ModalitySample*>& batch) const {
  if (batch.empty()) throw InputError("AVTNet: empty batch");
  for (const auto* s : batch) {
    for (Modality m : data::kModalities) {
      if (!architecture_.enabled(m)) continue;
      const FeatureMap expected = expected_shape(m, config_.input);
      if (!s->tensor(m).same_shape(expected))
        throw InputError("AVTNet: sample " + s->sample_id + " " + std::string(data::modality_name(m)) + " is " +
                         dims(s->tensor(m)) + ", expected " + dims(expected));
    }
  }
}

Mat AVTNet::joint_input(const Embeddings& e) const { return concat_features(e); }

Embeddings AVTNet::infer(const std::vector<const data::ModalitySample*>& batch, std::vector<Mat>* attention) const {
  check_batch(batch);
  const auto n = static_cast<Eigen::Index>(batch.size());
  Embeddings e;
  for (Modality m : data::kModalities) {
    if (!architecture_.enabled(m)) continue;
    const int k = data::index_of(m);
    e.features[k].resize(n, config_.feature_dim);
    for (Eigen::Index i = 0; i < n; ++i) e.features[k].row(i) = branches_[k].infer(batch[i]->tensor(m));
    if (architecture_.individual) e.individual[k] = heads_[k].infer(e.features[k]);
  }
  if (architecture_.joint == JointKind::Transformer) e.joint = transformer_.infer(joint_input(e), attention);
  if (architecture_.joint == JointKind::Dense) e.joint = dense_joint_.infer(joint_input(e));
  return e;
}

Embeddings AVTNet::forward(const std::vector<const data::ModalitySample*>& batch) {
  check_batch(batch);
  Embeddings e;
  std::vector<FeatureMap> inputs(batch.size());
  for (Modality m : data::kModalities) {
    if (!architecture_.enabled(m)) continue;
    const int k = data::index_of(m);
    for (std::size_t i = 0; i < batch.size(); ++i) inputs[i] = batch[i]->tensor(m);
    e.features[k] = branches_[k].forward(inputs);
    if (architecture_.individual) e.individual[k] = heads_[k].forward(e.features[k]);
  }
  if (architecture_.joint == JointKind::Transformer) e.joint = transformer_.forward(joint_input(e));
  if (architecture_.joint == JointKind::Dense) e.joint = dense_joint_.forward(joint_input(e));
  return e;
}

void AVTNet::backward(const std::array<Mat, 3>& d_individual, const Mat& d_joint,
                      const std::array<Mat, 3>& d_features) {
  Mat d_concat;
  if (d_joint.size() > 0) {
    if (architecture_.joint == JointKind::Transformer) d_concat = transformer_.backward(d_joint);
    if (architecture_.joint == JointKind::Dense) d_concat = dense_joint_.backward(d_joint);
  }
  int offset = 0;
  for (Modality m : data::kModalities) {
    if (!architecture_.enabled(m)) continue;
    const int k = data::index_of(m);
    Mat grad;
    if (d_features[k].size() > 0) grad = d_features[k];
    if (architecture_.individual && d_individual[k].size() > 0) {
      const Mat g = heads_[k].backward(d_individual[k]);
      grad = grad.size() > 0 ? Mat(grad + g) : g;
    }
    if (d_concat.size() > 0) {
      const Mat g = d_concat.middleCols(offset, config_.feature_dim);
      grad = grad.size() > 0 ? Mat(grad + g) : g;
    }
    offset += config_.feature_dim;
    if (grad.size() > 0) branches_[k].backward(grad);
  }
}

EmbeddingBundle AVTNet::embed(const data::ModalitySample& sample) const {
  const Embeddings e = infer({&sample});
  EmbeddingBundle b;
  if (e.individual[0].size() > 0) b.audio = e.individual[0].row(0).transpose();
  if (e.individual[1].size() > 0) b.visible = e.individual[1].row(0).transpose();
  if (e.individual[2].size() > 0) b.thermal = e.individual[2].row(0).transpose();
  if (e.joint.size() > 0) b.joint = e.joint.row(0).transpose();
  return b;
}

nn::ParameterList AVTNet::parameters() {
  nn::ParameterList out;
  for (Modality m : data::kModalities)
    if (architecture_.enabled(m)) branches_[data::index_of(m)].collect(out);
  if (architecture_.individual)
    for (Modality m : data::kModalities)
      if (architecture_.enabled(m)) heads_[data::index_of(m)].collect(out);
  if (architecture_.joint == JointKind::Transformer) transformer_.collect(out);
  if (architecture_.joint == JointKind::Dense) dense_joint_.collect(out);
  return out;
}

Mat concat_embeddings(const Embeddings& e) {
  Eigen::Index rows = 0, cols = 0;
  for (const Mat* m : {&e.individual[0], &e.individual[1], &e.individual[2], &e.joint}) {
    if (m->size() == 0) continue;
    rows = m->rows();
    cols += m->cols();
  }
  Mat out(rows, cols);
  Eigen::Index offset = 0;
  for (const Mat* m : {&e.individual[0], &e.individual[1], &e.individual[2], &e.joint}) {
    if (m->size() == 0) continue;
    out.middleCols(offset, m->cols()) = *m;
    offset += m->cols();
  }
  return out;
}

Vec concat_embeddings(const EmbeddingBundle& e) {
  Vec out(e.audio.size() + e.visible.size() + e.thermal.size() + e.joint.size());
  Eigen::Index offset = 0;
  for (const Vec* v : {&e.audio, &e.visible, &e.thermal, &e.joint}) {
    out.segment(offset, v->size()) = *v;
    offset += v->size();
  }
  return out;
}

Mat concat_features(const Embeddings& e) {
  Eigen::Index rows = 0, cols = 0;
  for (const Mat& m : e.features) {
    if (m.size() == 0) continue;
    rows = m.rows();
    cols += m.cols();
  }
  Mat out(rows, cols);
  Eigen::Index offset = 0;
  for (const Mat& m : e.features) {
    if (m.size() == 0) continue;
    out.middleCols(offset, m.cols()) = m;
    offset += m.cols();
  }
  return out;
}

// ---------------------------------------------------------------- recognizer

Recognizer::Recognizer(int input_width, const std::vector<int>& hidden, int n_classes, std::uint64_t seed,
                       const std::string& name)
    : input_width_(input_width), n_classes_(n_classes) {
  if (input_width < 1 || n_classes < 2) throw ConfigError("Recognizer: bad input width or class count");
  Rng rng(seed);
  int width = input_width;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    Hidden h;
    h.dense = nn::Dense(width, hidden[l], name + ".dense" + std::to_string(l), rng);
    h.norm = nn::BatchNorm(hidden[l], name + ".bn" + std::to_string(l));
    hidden_.push_back(std::move(h));
    width = hidden[l];
  }
  output_ = nn::Dense(width, n_classes, name + ".output", rng);
}

Mat Recognizer::logits(const Mat& x) const {
  if (x.cols() != input_width_)
    throw ConfigError("Recognizer: expected input width " + std::to_string(input_width_) + ", got " +
                      std::to_string(x.cols()));
  Mat h = x;
  for (const auto& l : hidden_) h = nn::ReLU::infer(l.norm.infer(l.dense.infer(h)));
  return output_.infer(h);
}

Mat Recognizer::predict_proba(const Mat& x) const { return nn::softmax(logits(x)); }

IntVec Recognizer::predict(const Mat& x) const {
  const Mat l = logits(x);
  IntVec out(l.rows());
  for (Eigen::Index i = 0; i < l.rows(); ++i) l.row(i).maxCoeff(&out(i));
  return out;
}

Mat Recognizer::forward(const Mat& x) {
  if (x.cols() != input_width_)
    throw ConfigError("Recognizer: expected input width " + std::to_string(input_width_) + ", got " +
                      std::to_string(x.cols()));
  Mat h = x;
  for (auto& l : hidden_) h = l.relu.forward(l.norm.forward(l.dense.forward(h)));
  return output_.forward(h);
}

Mat Recognizer::backward(const Mat& d_logits) {
  Mat g = output_.backward(d_logits);
  for (std::size_t l = hidden_.size(); l-- > 0;)
    g = hidden_[l].dense.backward(hidden_[l].norm.backward(hidden_[l].relu.backward(g)));
  return g;
}

nn::ParameterList Recognizer::parameters() {
  nn::ParameterList out;
  for (auto& l : hidden_) {
    l.dense.collect(out);
    l.norm.collect(out);
  }
  output_.collect(out);
  return out;
}

Vec recognizer_forward(const Recognizer& recognizer, const EmbeddingBundle& bundle) {
  const Vec x = concat_embeddings(bundle);
  return recognizer.predict_proba(x.transpose()).row(0).transpose();
}

}  // namespace avt::model
