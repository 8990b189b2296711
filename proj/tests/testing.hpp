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
#include "avt/dataset.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

namespace avt::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("avt_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Small network for gradient and structural tests.
inline model::AVTNetConfig tiny_config(int n_classes = 4) {
  model::AVTNetConfig c;
  c.input = {8, 24, 16, 3, 1};
  c.audio_filters = {4, 4, 6};
  c.audio_kernel = 5;
  c.image_filters = {3, 3};
  c.feature_dim = 6;
  c.embed_dim = 8;
  c.transformer_heads = 2;
  c.model_width = 8;
  c.transformer_hidden = 10;
  c.recognizer_hidden = {12, 10};
  c.n_classes = n_classes;
  return c;
}

inline data::Validity missing(std::initializer_list<data::Modality> absent) {
  data::Validity v;
  for (auto m : absent) v[m] = false;
  return v;
}

/// Validity cycling through the four single-missing conditions.
inline data::Validity condition(int i) {
  data::Validity v;
  if (i % 4 > 0) v.flags[static_cast<std::size_t>(i % 4 - 1)] = false;
  return v;
}

/// Gaussian tensors for valid modalities, exact zeros for missing ones.
inline data::ModalitySample random_sample(const data::InputShape& shape, const data::Validity& validity, int label,
                                          Rng& rng) {
  std::normal_distribution<double> gauss;
  data::ModalitySample s;
  s.sample_id = "r" + std::to_string(rng() % 1000000);
  s.subject_id = label;
  s.validity = validity;
  for (data::Modality m : data::kModalities) {
    FeatureMap t = data::zero_tensor(m, shape);
    if (validity[m])
      for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = gauss(rng);
    s.tensor(m) = std::move(t);
  }
  return s;
}

inline std::vector<const data::ModalitySample*> pointers(const std::vector<data::ModalitySample>& samples) {
  std::vector<const data::ModalitySample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

}  // namespace avt::test
