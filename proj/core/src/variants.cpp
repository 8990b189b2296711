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

#include "avt/variants.hpp"

#include "avt/checkpoint.hpp"

#include <algorithm>
#include <map>

namespace avt::eval {
namespace {

using losses::IndividualLoss;
using model::JointKind;

VariantConfig make(const std::string& name, std::array<bool, 3> modalities, bool individual, JointKind joint,
                   IndividualLoss individual_loss, JointLoss joint_loss = JointLoss::TripletHard) {
  VariantConfig v;
  v.name = name;
  v.architecture.modalities = modalities;
  v.architecture.individual = individual;
  v.architecture.joint = joint;
  v.individual_loss = individual_loss;
  v.joint_loss = joint_loss;
  return v;
}

const std::map<std::string, VariantConfig>& registry() {
  static const std::map<std::string, VariantConfig> table = [] {
    constexpr std::array<bool, 3> all{true, true, true};
    const auto mm = IndividualLoss::MissingModality;
    const auto th = IndividualLoss::TripletHard;
    std::map<std::string, VariantConfig> t;
    t["Prop"] = make("Prop", all, true, JointKind::Transformer, mm);
    t["Prop-I"] = make("Prop-I", all, true, JointKind::Dense, mm);
    t["Prop-II"] = make("Prop-II", all, true, JointKind::Transformer, th);
    t["Prop-III"] = make("Prop-III", all, false, JointKind::Transformer, mm);
    t["Dense-Triplet"] = make("Dense-Triplet", all, true, JointKind::Dense, th);
    t["JER-1"] = make("JER-1", all, false, JointKind::Dense, th);
    t["JER-2"] = make("JER-2", all, false, JointKind::Dense, th, JointLoss::TripletPrototypical);
    VariantConfig e2e = make("E2E", all, false, JointKind::None, th);
    e2e.end_to_end = true;
    t["E2E"] = e2e;
    t["AV"] = make("AV", {true, true, false}, true, JointKind::Transformer, mm);
    t["AT"] = make("AT", {true, false, true}, true, JointKind::Transformer, mm);
    t["VT"] = make("VT", {false, true, true}, true, JointKind::Transformer, mm);
    return t;
  }();
  return table;
}

std::string join_names() {
  std::string out;
  for (const auto& n : variant_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

std::string VariantConfig::label() const {
  return joint_loss == JointLoss::TripletPrototypical ? name + " (interpreted)" : name;
}

UnknownVariant::UnknownVariant(const std::string& name)
    : ConfigError("unknown variant '" + name + "'; valid variants: " + join_names()) {}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

VariantConfig variant_by_name(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw UnknownVariant(name);
  return it->second;
}

int recognizer_input_width(const VariantConfig& variant, const model::AVTNetConfig& config) {
  if (variant.end_to_end) return config.feature_dim * variant.architecture.enabled_count();
  return config.embed_dim * variant.architecture.embedding_count();
}

losses::LossValue triplet_prototypical_loss(const Mat& X, const IntVec& Y, double margin) {
  if (X.rows() != Y.size()) throw InputError("triplet_prototypical_loss: label count differs from batch size");
  losses::LossValue out = losses::triplet_hard_loss(X, Y, margin);
  const Eigen::Index n = X.rows();
  if (n == 0) return out;

  std::vector<int> classes(Y.data(), Y.data() + n);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const Eigen::Index k = static_cast<Eigen::Index>(classes.size());
  if (k < 2) return out;

  IntVec slot(n);
  for (Eigen::Index i = 0; i < n; ++i)
    slot(i) = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), Y(i)) - classes.begin());

  Mat centroids = Mat::Zero(k, X.cols());
  Vec counts = Vec::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    centroids.row(slot(i)) += X.row(i);
    counts(slot(i)) += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) centroids.row(c) /= counts(c);

  Mat d(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) d(i, c) = (X.row(i) - centroids.row(c)).squaredNorm();

  // Cross-entropy on logits -d.
  Mat probs = nn::softmax(-d);
  double ce = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ce -= std::log(std::max(probs(i, slot(i)), 1e-300));
  ce /= static_cast<double>(n);

  // dL/dd = -(p - onehot) / n
  Mat g_d = -probs;
  for (Eigen::Index i = 0; i < n; ++i) g_d(i, slot(i)) += 1.0;
  g_d /= static_cast<double>(n);

  Mat grad = Mat::Zero(n, X.cols());
  Mat g_centroid = Mat::Zero(k, X.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) {
      const RowVec diff = 2.0 * g_d(i, c) * (X.row(i) - centroids.row(c));
      grad.row(i) += diff;
      g_centroid.row(c) -= diff;
    }
  for (Eigen::Index i = 0; i < n; ++i) grad.row(i) += g_centroid.row(slot(i)) / counts(slot(i));

  out.value += ce;
  if (out.grad.size() == 0) out.grad = Mat::Zero(n, X.cols());
  out.grad += grad;
  out.degenerate = false;
  return out;
}

Pipeline::Pipeline(VariantConfig variant, const model::AVTNetConfig& config, std::uint64_t seed)
    : variant_(std::move(variant)),
      seed_(seed),
      net_(config, variant_.architecture, seed),
      recognizer_(recognizer_input_width(variant_, config), config.recognizer_hidden, config.n_classes,
                  seed + 0x9e3779b97f4a7c15ULL) {
  if (recognizer_.input_width() != recognizer_input_width(variant_, config))
    throw ConfigError("recognizer width mismatch for variant " + variant_.name);
}

Mat Pipeline::recognizer_input(const model::Embeddings& e) const {
  return variant_.end_to_end ? model::concat_features(e) : model::concat_embeddings(e);
}

Vec Pipeline::recognizer_input(const model::EmbeddingBundle& bundle) const {
  if (variant_.end_to_end) throw ConfigError("end-to-end variants take features, not embeddings");
  return model::concat_embeddings(bundle);
}

Mat Pipeline::predict_proba(const std::vector<const data::ModalitySample*>& batch) const {
  return recognizer_.predict_proba(recognizer_input(net_.infer(batch)));
}

IntVec Pipeline::predict(const std::vector<const data::ModalitySample*>& batch) const {
  return recognizer_.predict(recognizer_input(net_.infer(batch)));
}

void Pipeline::save(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::KeyValueConfig kv = net_.config().to_kv();
  kv.set("variant", variant_.name);
  kv.set("seed", std::to_string(seed_));
  kv.save(dir / "model.cfg");
  checkpoint::save(dir / "avtnet.ckpt", checkpoint::snapshot(net_.parameters()));
  checkpoint::save(dir / "recognizer.ckpt", checkpoint::snapshot(recognizer_.parameters()));
}

Pipeline Pipeline::load(const std::filesystem::path& dir) {
  const io::KeyValueConfig kv = io::KeyValueConfig::load(dir / "model.cfg");
  if (!kv.contains("variant")) throw ConfigError((dir / "model.cfg").string() + " names no variant");
  Pipeline p(variant_by_name(kv.get_string("variant", "")), model::AVTNetConfig::from_kv(kv),
             std::stoull(kv.get_string("seed", "0")));
  checkpoint::restore(checkpoint::load(dir / "avtnet.ckpt"), p.net_.parameters());
  checkpoint::restore(checkpoint::load(dir / "recognizer.ckpt"), p.recognizer_.parameters());
  return p;
}

}  // namespace avt::eval
