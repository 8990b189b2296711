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

#include "avt/mining.hpp"
#include "avt/tensor.hpp"

#include <optional>

namespace avt::losses {

/// Scalar loss and its gradient with respect to the embedding matrix.
struct LossValue {
  double value = 0.0;
  Mat grad;
  /// Anchors that contributed to the mean.
  int anchors = 0;
  /// True when no anchor had the candidates the loss needs (e.g. a single-class batch).
  bool degenerate = false;
};

/// log(1 + e^a) evaluated as max(a, 0) + log1p(e^-|a|).
double softplus(double a);
double sigmoid(double a);

struct MissingModalityOptions {
  mining::MiningOptions mining;
  /// Optional ceiling on the nearest-missing distance term. Off by default.
  std::optional<double> missing_distance_cap;
};

/// Mean over valid anchors of softplus(d_ap - d_an - d_am); 0 when no anchor is valid.
LossValue missing_modality_loss(const mining::MiniBatch& batch, const MissingModalityOptions& options = {});

inline constexpr double kDefaultMargin = 0.2;

/// Batch-hard triplet loss: mean over anchors owning at least one positive and
/// one negative of max(d_ap - d_an + margin, 0).
LossValue triplet_hard_loss(const Mat& X, const IntVec& Y, double margin = kDefaultMargin,
                            const mining::MiningOptions& options = {});

/// Terms of L = L_c + L_t + L_s + L_j (visible, thermal, audio, joint).
struct LossBreakdown {
  double L_c = 0.0;
  double L_t = 0.0;
  double L_s = 0.0;
  double L_j = 0.0;
  double L_total = 0.0;
};

enum class IndividualLoss { MissingModality, TripletHard };

struct TotalLossOptions {
  IndividualLoss individual = IndividualLoss::MissingModality;
  MissingModalityOptions missing_modality;
  double margin = kDefaultMargin;
};

struct TotalLoss {
  LossBreakdown breakdown;
  /// Gradients w.r.t. each batch's X; empty when the batch was absent.
  Mat grad_audio, grad_visible, grad_thermal, grad_joint;
  bool joint_degenerate = false;
};

/// Sums the three individual-embedding losses and the joint triplet hard loss.
/// Null batches contribute 0. The joint batch's B is ignored. Every present
/// batch must carry the same labels in the same order.
TotalLoss total_loss(const mining::MiniBatch* audio, const mining::MiniBatch* visible,
                     const mining::MiniBatch* thermal, const mining::MiniBatch* joint,
                     const TotalLossOptions& options = {});

}  // namespace avt::losses
