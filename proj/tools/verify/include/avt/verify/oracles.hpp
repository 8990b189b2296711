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

#include <functional>

/// Slow reference implementations written directly from the definitions,
/// sharing no code with the library kernels they check.
namespace avt::oracle {

double distance(const Mat& X, Eigen::Index i, Eigen::Index j, bool squared = false);

/// Mean over valid anchors of softplus(d_ap - d_an - d_am) by explicit loops.
double missing_modality_loss(const Mat& X, const IntVec& Y, const IntVec& B, bool squared = false);

/// Mean over anchors with a positive and a negative of max(d_ap - d_an + margin, 0).
double triplet_hard_loss(const Mat& X, const IntVec& Y, double margin, bool squared = false);

/// Central differences of f at X, one coordinate at a time.
Mat finite_difference(const std::function<double(const Mat&)>& f, const Mat& X, double h = 1e-6);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(const Mat& a, const Mat& b);

/// |DFT(x)_k|^2 for k = 0 .. n/2 by the O(n^2) sum.
Vec dft_power(const Vec& x);

}  // namespace avt::oracle
