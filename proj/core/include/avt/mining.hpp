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

#include <filesystem>

namespace avt::mining {

/// One modality's embedded mini-batch: K x D features, class labels and
/// binary validity (1 = sensor present, 0 = zero-filled placeholder).
struct MiniBatch {
  Mat X;
  IntVec Y;
  IntVec B;

  Eigen::Index size() const { return X.rows(); }
  /// Throws InputError when label / validity lengths disagree with K.
  void check_shapes() const;
  /// Rows of X have unit norm within `tolerance`.
  bool rows_unit_norm(double tolerance = 1e-6) const;
};

/// Symmetric, non-negative, zero-diagonal K x K Euclidean distances.
struct DistanceMatrix {
  Mat values;
};

struct MaskSet {
  BoolMat positive;        // y_i == y_j
  BoolMat valid;           // b_i && b_j
  BoolMat missing;         // !valid
  BoolMat valid_positive;  // positive && valid, diagonal cleared
  BoolMat negative;        // !positive
  BoolMat valid_negative;  // negative && valid
};

enum class MinimumMode {
  /// Minimum over the masked candidate set (masked-out entries never win).
  CandidateSet,
  /// Row-wise minimum of the Hadamard product P o A, masked zeros included.
  Literal,
};

struct MiningOptions {
  MinimumMode minimum = MinimumMode::CandidateSet;
  /// Use ||x_i - x_j||^2 instead of the Euclidean distance.
  bool squared = false;
};

/// Per-anchor hard-example distances plus the index of the selected partner
/// (-1 when the anchor's candidate set is empty or the anchor is missing).
struct LossComponents {
  Vec d_ap, d_an, d_am;
  IntVec ap_index, an_index, am_index;
};

DistanceMatrix pairwise_distances(const Mat& X, const MiningOptions& options = {});
MaskSet build_masks(const IntVec& Y, const IntVec& B);
LossComponents loss_components(const DistanceMatrix& P, const MaskSet& masks, const IntVec& B,
                               const MiningOptions& options = {});

/// Row-wise extreme of P over `candidates`. Empty rows give value 0 and index -1.
/// Ties resolve to the lowest column index.
void masked_row_max(const Mat& P, const BoolMat& candidates, Vec& value, IntVec& index);
void masked_row_min(const Mat& P, const BoolMat& candidates, Vec& value, IntVec& index);

/// Writes P, the six masks and the three component vectors as delimited text.
void dump_debug(const std::filesystem::path& path, const DistanceMatrix& P, const MaskSet& masks,
                const LossComponents& components);

}  // namespace avt::mining
