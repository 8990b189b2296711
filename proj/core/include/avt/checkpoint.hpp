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

#include "avt/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

/// Binary weight container, little endian:
///
///   "AVTW" | u32 version | u32 count |
///   count x ( u32 name_len | name | u32 rows | u32 cols | rows*cols f64, row-major )
namespace avt::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Mat value;
};

void save(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(const nn::ParameterList& params);
/// Copies tensors into same-named parameters; every parameter must be present
/// with a matching shape.
void restore(const std::vector<NamedTensor>& tensors, const nn::ParameterList& params);

/// FNV-1a over parameter names and values.
std::uint64_t checksum(const nn::ParameterList& params);

}  // namespace avt::checkpoint
