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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace avt::data {

enum class Modality : int { Audio = 0, Visible = 1, Thermal = 2 };
inline constexpr std::array<Modality, 3> kModalities{Modality::Audio, Modality::Visible, Modality::Thermal};
inline constexpr int index_of(Modality m) { return static_cast<int>(m); }
std::string_view modality_name(Modality m);

/// Per-modality sensor validity; false marks a zero-filled placeholder.
struct Validity {
  std::array<bool, 3> flags{true, true, true};

  bool operator[](Modality m) const { return flags[index_of(m)]; }
  bool& operator[](Modality m) { return flags[index_of(m)]; }
  int missing_count() const;
  bool all_valid() const { return missing_count() == 0; }
  /// "111", "011", ... in (audio, visible, thermal) order.
  std::string code() const;
  friend bool operator==(const Validity&, const Validity&) = default;
  friend auto operator<=>(const Validity&, const Validity&) = default;
};

struct InputShape {
  int n_mels = 128;
  int n_frames = 589;
  int image_size = 224;
  int visible_channels = 3;
  int thermal_channels = 1;

  static InputShape full() { return {}; }
  /// 64x64 images and 64-frame spectrograms.
  static InputShape toy() { return {128, 64, 64, 3, 1}; }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

/// One synchronised trimodal record. Spectrograms are stored as
/// n_mels channels x n_frames (height 1); images as channels x (H*W).
struct ModalitySample {
  std::string sample_id;
  int subject_id = 0;
  FeatureMap spectrogram;
  FeatureMap visible;
  FeatureMap thermal;
  Validity validity;

  FeatureMap& tensor(Modality m);
  const FeatureMap& tensor(Modality m) const;
};

FeatureMap zero_tensor(Modality m, const InputShape& shape);

/// Throws InputError if shapes differ from `shape`, more than one modality is
/// missing, or a missing modality is not exactly zero.
void validate_sample(const ModalitySample& sample, const InputShape& shape);

struct AblationOptions {
  /// Also emit the two-modalities-missing copies. Off by default.
  bool multi_missing = false;
};

std::string ablation_suffix(const Validity& validity);

/// [original, audio-ablated, visible-ablated, thermal-ablated].
std::vector<ModalitySample> make_ablations(const ModalitySample& sample, const AblationOptions& options = {});

enum class Split { Train, Test };
std::string_view split_name(Split split);

struct ManifestEntry {
  std::string sample_id;
  int subject_id = 0;
  /// Relative tensor locations indexed by Modality; empty for a missing modality.
  std::array<std::string, 3> paths;
  Validity validity;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int n_classes = 0;
  std::uint64_t seed = 0;

  /// Unique ids, labels inside [0, n_classes).
  void validate() const;
  DatasetManifest subset(Split split) const;
  std::size_t size() const { return entries.size(); }
};

/// Manifest-level counterpart of make_ablations: ablated rows share the
/// original's tensor files and leave the missing modality's path empty.
std::vector<ManifestEntry> make_ablations(const ManifestEntry& entry, const AblationOptions& options = {});
DatasetManifest ablate_manifest(const DatasetManifest& manifest, const AblationOptions& options = {});

/// Random split stratified by (subject, validity pattern). Deterministic for a
/// given seed; every subject lands in both partitions.
DatasetManifest split_dataset(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed);

/// Delimited text with a header row:
/// sample_id,subject_id,audio_path,visible_path,thermal_path,b_audio,b_visible,b_thermal,split
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path, int n_classes = 0, std::uint64_t seed = 0);

std::string tensor_path(const std::string& sample_id, Modality m);

struct SyntheticOptions {
  int n_subjects = 8;
  int samples_per_subject = 20;
  std::uint64_t seed = 7;
  InputShape shape = InputShape::toy();
  /// Scales all per-sample variation of one modality; 0 makes every sample of
  /// a subject identical in that modality.
  double audio_noise = 1.0;
  double visible_noise = 1.0;
  double thermal_noise = 1.0;
};

/// Fully-valid samples aligned one-to-one with `manifest.entries`.
struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<ModalitySample> samples;
};

SyntheticDataset generate_synthetic_dataset(const SyntheticOptions& options);

/// Resolves manifest rows to tensors. Missing modalities come back as zeros.
class SampleLoader {
 public:
  virtual ~SampleLoader() = default;
  virtual ModalitySample load(const ManifestEntry& entry) const = 0;
  virtual const InputShape& shape() const = 0;
};

class InMemoryLoader final : public SampleLoader {
 public:
  InMemoryLoader(const std::vector<ModalitySample>& samples, InputShape shape);
  ModalitySample load(const ManifestEntry& entry) const override;
  const InputShape& shape() const override { return shape_; }

 private:
  InputShape shape_;
  std::map<std::string, std::shared_ptr<const FeatureMap>> tensors_;
};

/// Reads `.npy` tensors relative to a dataset root. Images are stored
/// height x width x channels, spectrograms n_mels x n_frames.
class FileLoader final : public SampleLoader {
 public:
  FileLoader(std::filesystem::path root, InputShape shape);
  ModalitySample load(const ManifestEntry& entry) const override;
  const InputShape& shape() const override { return shape_; }

 private:
  std::filesystem::path root_;
  InputShape shape_;
};

FeatureMap read_tensor(const std::filesystem::path& path, Modality m, const InputShape& shape);
void write_tensor(const std::filesystem::path& path, const FeatureMap& tensor, Modality m);

/// Dataset-level metadata stored next to the manifest as `dataset.cfg`.
struct DatasetInfo {
  int n_classes = 0;
  std::uint64_t seed = 0;
  InputShape shape;
  double test_fraction = 0.2;
};

void write_dataset_info(const std::filesystem::path& path, const DatasetInfo& info);
DatasetInfo read_dataset_info(const std::filesystem::path& path);

/// Ablated + split synthetic data held in memory.
struct PreparedDataset {
  DatasetManifest manifest;
  std::shared_ptr<const SampleLoader> loader;
};

PreparedDataset prepare_synthetic(const SyntheticOptions& options, double test_fraction);

/// Writes tensors, manifest.csv and dataset.cfg under `root`.
void save_synthetic(const std::filesystem::path& root, const SyntheticDataset& dataset, double test_fraction);

/// Loads manifest.csv + dataset.cfg from `root` with a FileLoader.
PreparedDataset open_dataset(const std::filesystem::path& root);

struct IngestOptions {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  InputShape shape;
  int audio_sample_rate = 44000;
  bool resample_audio = false;
};

/// Reads `<input>/manifest.csv` (sample_id, subject_id, audio_path, visible_path,
/// thermal_path) of fully-valid samples, computes standardised log-mel
/// spectrograms for 1-D waveform inputs, writes tensors under `<output>`,
/// then ablates and splits. Returns the written manifest.
DatasetManifest ingest_dataset(const std::filesystem::path& input, const std::filesystem::path& output,
                               const IngestOptions& options);

}  // namespace avt::data
