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

#include "avt/losses.hpp"

#include "avt/errors.hpp"

#include <cmath>

namespace avt::losses {
namespace {

// Accumulates coef * d(dist(x_i, x_j)) into grad rows i and j.
void add_pair_gradient(const Mat& X, Eigen::Index i, int j, double coef, bool squared, Mat& grad) {
  if (j < 0 || coef == 0.0) return;
  const RowVec diff = X.row(i) - X.row(j);
  RowVec g;
  if (squared) {
    g = 2.0 * diff;
  } else {
    const double d = diff.norm();
    if (d == 0.0) return;
    g = diff / d;
  }
  grad.row(i) += coef * g;
  grad.row(j) -= coef * g;
}

}  // namespace

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

LossValue missing_modality_loss(const mining::MiniBatch& batch, const MissingModalityOptions& options) {
  batch.check_shapes();
  const Mat& X = batch.X;
  LossValue out;
  out.grad = Mat::Zero(X.rows(), X.cols());

  const int n_valid = static_cast<int>(batch.B.sum());
  if (n_valid == 0) {
    out.degenerate = true;
    return out;
  }

  const auto P = mining::pairwise_distances(X, options.mining);
  const auto masks = mining::build_masks(batch.Y, batch.B);
  const auto c = mining::loss_components(P, masks, batch.B, options.mining);
  const bool squared = options.mining.squared;

  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (batch.B(i) == 0) continue;
    double d_am = c.d_am(i);
    bool capped = false;
    if (options.missing_distance_cap && d_am > *options.missing_distance_cap) {
      d_am = *options.missing_distance_cap;
      capped = true;
    }
    const double alpha = c.d_ap(i) - c.d_an(i) - d_am;
    total += softplus(alpha);
    const double w = sigmoid(alpha) / n_valid;
    add_pair_gradient(X, i, c.ap_index(i), w, squared, out.grad);
    add_pair_gradient(X, i, c.an_index(i), -w, squared, out.grad);
    if (!capped) add_pair_gradient(X, i, c.am_index(i), -w, squared, out.grad);
  }
  out.value = total / n_valid;
  out.anchors = n_valid;
  return out;
}

LossValue triplet_hard_loss(const Mat& X, const IntVec& Y, double margin, const mining::MiningOptions& options) {
  if (Y.size() != X.rows()) throw InputError("triplet_hard_loss: label length differs from batch size");
  LossValue out;
  out.grad = Mat::Zero(X.rows(), X.cols());

  const IntVec all_valid = IntVec::Ones(X.rows());
  const auto P = mining::pairwise_distances(X, options);
  const auto masks = mining::build_masks(Y, all_valid);
  Vec d_ap, d_an;
  IntVec ap, an;
  mining::masked_row_max(P.values, masks.valid_positive, d_ap, ap);
  mining::masked_row_min(P.values, masks.negative, d_an, an);

  int anchors = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (ap(i) >= 0 && an(i) >= 0) ++anchors;
  if (anchors == 0) {
    out.degenerate = true;
    return out;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (ap(i) < 0 || an(i) < 0) continue;
    const double hinge = d_ap(i) - d_an(i) + margin;
    if (hinge <= 0.0) continue;
    total += hinge;
    add_pair_gradient(X, i, ap(i), 1.0 / anchors, options.squared, out.grad);
    add_pair_gradient(X, i, an(i), -1.0 / anchors, options.squared, out.grad);
  }
  out.value = total / anchors;
  out.anchors = anchors;
  return out;
}

TotalLoss total_loss(const mining::MiniBatch* audio, const mining::MiniBatch* visible,
                     const mining::MiniBatch* thermal, const mining::MiniBatch* joint,
                     const TotalLossOptions& options) {
  const IntVec* labels = nullptr;
  for (const auto* b : {audio, visible, thermal, joint}) {
    if (!b) continue;
    if (b->Y.size() != b->X.rows()) throw InputError("total_loss: label length differs from batch size");
    if (!labels)
      labels = &b->Y;
    else if (*labels != b->Y)
      throw InputError("total_loss: embedding batches are not aligned sample-for-sample");
  }

  const auto individual = [&](const mining::MiniBatch* b, double& term, Mat& grad) {
    if (!b) return;
    const LossValue v = options.individual == IndividualLoss::MissingModality
                            ? missing_modality_loss(*b, options.missing_modality)
                            : triplet_hard_loss(b->X, b->Y, options.margin, options.missing_modality.mining);
    term = v.value;
    grad = v.grad;
  };

  TotalLoss out;
  individual(visible, out.breakdown.L_c, out.grad_visible);
  individual(thermal, out.breakdown.L_t, out.grad_thermal);
  individual(audio, out.breakdown.L_s, out.grad_audio);
  if (joint) {
    const LossValue v = triplet_hard_loss(joint->X, joint->Y, options.margin, options.missing_modality.mining);
    out.breakdown.L_j = v.value;
    out.grad_joint = v.grad;
    out.joint_degenerate = v.degenerate;
  }
  const auto& b = out.breakdown;
  out.breakdown.L_total = b.L_c + b.L_t + b.L_s + b.L_j;
  return out;
}

}  // namespace avt::losses
