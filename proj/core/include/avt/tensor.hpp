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

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace avt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using IntVec = Eigen::VectorXi;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

using Rng = std::mt19937_64;

/// Planar channels-first feature map. Each row of `data` is one channel laid
/// out row-major over (height, width). One-dimensional signals use height 1.
struct FeatureMap {
  RowMat data;
  int height = 1;
  int width = 0;

  FeatureMap() = default;
  FeatureMap(int channels, int h, int w) : data(RowMat::Zero(channels, h * w)), height(h), width(w) {}

  int channels() const { return static_cast<int>(data.rows()); }
  bool same_shape(const FeatureMap& other) const {
    return channels() == other.channels() && height == other.height && width == other.width;
  }
  bool all_zero() const { return (data.array() == 0.0).all(); }
};

}  // namespace avt
