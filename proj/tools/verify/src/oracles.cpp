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

#include "avt/verify/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace avt::oracle {

double distance(const Mat& X, Eigen::Index i, Eigen::Index j, bool squared) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double diff = X(i, d) - X(j, d);
    s += diff * diff;
  }
  return squared ? s : std::sqrt(s);
}

double missing_modality_loss(const Mat& X, const IntVec& Y, const IntVec& B, bool squared) {
  const Eigen::Index K = X.rows();
  double total = 0.0;
  int anchors = 0;
  for (Eigen::Index a = 0; a < K; ++a) {
    if (B(a) == 0) continue;
    ++anchors;
    double d_ap = 0.0, d_an = 0.0, d_am = 0.0;
    bool have_n = false, have_m = false;
    for (Eigen::Index p = 0; p < K; ++p)
      if (p != a && B(p) != 0 && Y(p) == Y(a)) d_ap = std::max(d_ap, distance(X, a, p, squared));
    for (Eigen::Index n = 0; n < K; ++n) {
      if (B(n) == 0 || Y(n) == Y(a)) continue;
      const double d = distance(X, a, n, squared);
      if (!have_n || d < d_an) d_an = d;
      have_n = true;
    }
    for (Eigen::Index m = 0; m < K; ++m) {
      if (B(m) != 0) continue;
      const double d = distance(X, a, m, squared);
      if (!have_m || d < d_am) d_am = d;
      have_m = true;
    }
    const double alpha = d_ap - d_an - d_am;
    total += alpha > 30.0 ? alpha : std::log(1.0 + std::exp(alpha));
  }
  return anchors > 0 ? total / anchors : 0.0;
}

double triplet_hard_loss(const Mat& X, const IntVec& Y, double margin, bool squared) {
  const Eigen::Index K = X.rows();
  double total = 0.0;
  int anchors = 0;
  for (Eigen::Index a = 0; a < K; ++a) {
    double d_ap = -1.0;
    double d_an = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < K; ++j) {
      if (j == a) continue;
      const double d = distance(X, a, j, squared);
      if (Y(j) == Y(a))
        d_ap = std::max(d_ap, d);
      else
        d_an = std::min(d_an, d);
    }
    if (d_ap < 0.0 || std::isinf(d_an)) continue;
    ++anchors;
    total += std::max(d_ap - d_an + margin, 0.0);
  }
  return anchors > 0 ? total / anchors : 0.0;
}

Mat finite_difference(const std::function<double(const Mat&)>& f, const Mat& X, double h) {
  Mat g(X.rows(), X.cols());
  Mat probe = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double x0 = probe(i, j);
      probe(i, j) = x0 + h;
      const double up = f(probe);
      probe(i, j) = x0 - h;
      const double down = f(probe);
      probe(i, j) = x0;
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

double relative_error(const Mat& a, const Mat& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

Vec dft_power(const Vec& x) {
  const Eigen::Index n = x.size();
  Vec out(n / 2 + 1);
  for (Eigen::Index k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      re += x(t) * std::cos(w);
      im -= x(t) * std::sin(w);
    }
    out(k) = re * re + im * im;
  }
  return out;
}

}  // namespace avt::oracle
