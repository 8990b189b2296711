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

#include "avt/mining.hpp"

#include "avt/errors.hpp"

#include <fstream>
#include <iomanip>

namespace avt::mining {

void MiniBatch::check_shapes() const {
  if (Y.size() != X.rows() || B.size() != X.rows())
    throw InputError("MiniBatch: X, Y and B must share the batch dimension");
  if (((B.array() != 0) && (B.array() != 1)).any()) throw InputError("MiniBatch: validity labels must be 0 or 1");
}

bool MiniBatch::rows_unit_norm(double tolerance) const {
  return ((X.rowwise().norm().array() - 1.0).abs() <= tolerance).all();
}

DistanceMatrix pairwise_distances(const Mat& X, const MiningOptions& options) {
  const Eigen::Index K = X.rows();
  Mat d2 = Mat::Zero(K, K);
  // exact zeros for duplicated rows, exactly symmetric
  const Mat Xt = X.transpose();
  for (Eigen::Index j = 1; j < K; ++j)
    for (Eigen::Index i = 0; i < j; ++i) d2(i, j) = d2(j, i) = (Xt.col(i) - Xt.col(j)).squaredNorm();
  DistanceMatrix P;
  P.values = options.squared ? d2 : Mat(d2.cwiseSqrt());
  return P;
}

MaskSet build_masks(const IntVec& Y, const IntVec& B) {
  if (Y.size() != B.size()) throw InputError("build_masks: label and validity lengths differ");
  const Eigen::Index K = Y.size();
  MaskSet m;
  m.positive = (Y.replicate(1, K).array() == Y.transpose().replicate(K, 1).array()).matrix();
  const auto b = (B.array() != 0).matrix();
  m.valid = (b.replicate(1, K).array() && b.transpose().replicate(K, 1).array()).matrix();
  m.missing = (!m.valid.array()).matrix();
  m.valid_positive = (m.positive.array() && m.valid.array()).matrix();
  m.valid_positive.diagonal().setConstant(false);
  m.negative = (!m.positive.array()).matrix();
  m.valid_negative = (m.negative.array() && m.valid.array()).matrix();
  return m;
}

void masked_row_max(const Mat& P, const BoolMat& candidates, Vec& value, IntVec& index) {
  const Eigen::Index K = P.rows();
  value = Vec::Zero(K);
  index = IntVec::Constant(K, -1);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (!candidates.row(i).any()) continue;
    Eigen::Index j = 0;
    // masked-out entries sit below every candidate (distances are non-negative)
    (P.row(i).array() + (candidates.row(i).array().cast<double>() - 1.0) * (P.row(i).maxCoeff() + 1.0))
        .maxCoeff(&j);
    value(i) = P(i, j);
    index(i) = static_cast<int>(j);
  }
}

void masked_row_min(const Mat& P, const BoolMat& candidates, Vec& value, IntVec& index) {
  const Eigen::Index K = P.rows();
  value = Vec::Zero(K);
  index = IntVec::Constant(K, -1);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (!candidates.row(i).any()) continue;
    Eigen::Index j = 0;
    // sentinel: row max + 1 added to masked-out entries
    const double sentinel = P.row(i).maxCoeff() + 1.0;
    (P.row(i).array() + (1.0 - candidates.row(i).array().cast<double>()) * sentinel).minCoeff(&j);
    value(i) = P(i, j);
    index(i) = static_cast<int>(j);
  }
}

namespace {

// Row minimum of the Hadamard product P o A: masked entries contribute 0.
void literal_row_min(const Mat& P, const BoolMat& mask, Vec& value, IntVec& index) {
  const Eigen::Index K = P.rows();
  const Mat hadamard = P.cwiseProduct(mask.cast<double>());
  value = Vec::Zero(K);
  index = IntVec::Constant(K, -1);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (!mask.row(i).any()) continue;
    Eigen::Index j = 0;
    value(i) = hadamard.row(i).minCoeff(&j);
    // a masked-out zero carries no gradient
    index(i) = mask(i, j) ? static_cast<int>(j) : -1;
  }
}

}  // namespace

LossComponents loss_components(const DistanceMatrix& P, const MaskSet& masks, const IntVec& B,
                               const MiningOptions& options) {
  const Mat& D = P.values;
  const Eigen::Index K = D.rows();
  if (D.cols() != K || B.size() != K || masks.valid.rows() != K)
    throw InputError("loss_components: inconsistent shapes");

  BoolMat missing_no_self = masks.missing;
  missing_no_self.diagonal().setConstant(false);

  LossComponents c;
  masked_row_max(D, masks.valid_positive, c.d_ap, c.ap_index);
  if (options.minimum == MinimumMode::CandidateSet) {
    masked_row_min(D, masks.valid_negative, c.d_an, c.an_index);
    masked_row_min(D, missing_no_self, c.d_am, c.am_index);
  } else {
    literal_row_min(D, masks.valid_negative, c.d_an, c.an_index);
    literal_row_min(D, missing_no_self, c.d_am, c.am_index);
  }

  for (Eigen::Index i = 0; i < K; ++i) {
    if (B(i) != 0) continue;
    c.d_ap(i) = c.d_an(i) = c.d_am(i) = 0.0;
    c.ap_index(i) = c.an_index(i) = c.am_index(i) = -1;
  }
  return c;
}

void dump_debug(const std::filesystem::path& path, const DistanceMatrix& P, const MaskSet& masks,
                const LossComponents& components) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
  out << "# P\n" << P.values.format(csv) << '\n';
  const std::pair<const char*, const BoolMat*> named[] = {
      {"A_p", &masks.positive},      {"A_v", &masks.valid},    {"A_m", &masks.missing},
      {"A_pv", &masks.valid_positive}, {"A_n", &masks.negative}, {"A_nv", &masks.valid_negative}};
  for (const auto& [name, mask] : named) out << "# " << name << '\n' << mask->cast<int>().format(csv) << '\n';
  out << "# d_ap\n" << components.d_ap.transpose().format(csv) << '\n';
  out << "# d_an\n" << components.d_an.transpose().format(csv) << '\n';
  out << "# d_am\n" << components.d_am.transpose().format(csv) << '\n';
}

}  // namespace avt::mining
