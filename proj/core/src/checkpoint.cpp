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

#include "avt/checkpoint.hpp"

#include "avt/errors.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace avt::checkpoint {
namespace {

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

void save(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write("AVTW", 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
    const RowMat row_major = t.value;
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(row_major.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

std::vector<NamedTensor> load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "AVTW", 4) != 0) throw IoError(path.string() + " is not an AVT checkpoint");
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion)
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32(in);
  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    t.name.resize(get_u32(in));
    in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    RowMat row_major(rows, cols);
    in.read(reinterpret_cast<char*>(row_major.data()), static_cast<std::streamsize>(row_major.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint " + path.string());
    t.value = row_major;
  }
  return tensors;
}

std::vector<NamedTensor> snapshot(const nn::ParameterList& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(const std::vector<NamedTensor>& tensors, const nn::ParameterList& params) {
  std::map<std::string, const Mat*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  for (auto* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ConfigError("checkpoint has no tensor named " + p->name);
    if (it->second->rows() != p->value.rows() || it->second->cols() != p->value.cols())
      throw ConfigError("checkpoint tensor " + p->name + " has the wrong shape");
    p->value = *it->second;
  }
}

std::uint64_t checksum(const nn::ParameterList& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* p : params) {
    fnv(h, p->name.data(), p->name.size());
    const RowMat row_major = p->value;
    fnv(h, row_major.data(), static_cast<std::size_t>(row_major.size()) * sizeof(double));
  }
  return h;
}

}  // namespace avt::checkpoint
