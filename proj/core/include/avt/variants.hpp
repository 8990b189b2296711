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

#include "avt/avtnet.hpp"
#include "avt/errors.hpp"
#include "avt/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace avt::eval {

enum class JointLoss { TripletHard, TripletPrototypical };

struct VariantConfig {
  std::string name;
  model::Architecture architecture;
  losses::IndividualLoss individual_loss = losses::IndividualLoss::MissingModality;
  JointLoss joint_loss = JointLoss::TripletHard;
  /// Feature branches feed the recognizer directly; trained with cross-entropy only.
  bool end_to_end = false;

  /// Row label in reports.
  std::string label() const;
  bool bimodal() const { return architecture.enabled_count() == 2; }
};

class UnknownVariant : public ConfigError {
 public:
  explicit UnknownVariant(const std::string& name);
};

/// All variant names in report order.
const std::vector<std::string>& variant_names();
VariantConfig variant_by_name(const std::string& name);

/// Width of the recognizer input: 256 per embedding, or the concatenated
/// branch features for end-to-end variants.
int recognizer_input_width(const VariantConfig& variant, const model::AVTNetConfig& config);

/// Class prototypes are the batch means of each class's embeddings. The loss
/// is softmax cross-entropy over negative squared distances to the prototypes
/// plus the batch-hard triplet hinge.
losses::LossValue triplet_prototypical_loss(const Mat& X, const IntVec& Y, double margin = losses::kDefaultMargin);

/// AVTNet plus recognizer for one variant.
class Pipeline {
 public:
  Pipeline(VariantConfig variant, const model::AVTNetConfig& config, std::uint64_t seed);

  const VariantConfig& variant() const { return variant_; }
  std::uint64_t seed() const { return seed_; }
  model::AVTNet& net() { return net_; }
  const model::AVTNet& net() const { return net_; }
  model::Recognizer& recognizer() { return recognizer_; }
  const model::Recognizer& recognizer() const { return recognizer_; }

  /// Embeddings (or features, end to end) concatenated for the recognizer.
  Mat recognizer_input(const model::Embeddings& e) const;
  Vec recognizer_input(const model::EmbeddingBundle& bundle) const;

  Mat predict_proba(const std::vector<const data::ModalitySample*>& batch) const;
  IntVec predict(const std::vector<const data::ModalitySample*>& batch) const;

  /// Writes model.cfg, avtnet.ckpt and recognizer.ckpt into `dir`.
  void save(const std::filesystem::path& dir);
  static Pipeline load(const std::filesystem::path& dir);

 private:
  VariantConfig variant_;
  std::uint64_t seed_;
  model::AVTNet net_;
  model::Recognizer recognizer_;
};

}  // namespace avt::eval
