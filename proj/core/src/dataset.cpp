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

#include "avt/dataset.hpp"

#include "avt/audio.hpp"
#include "avt/errors.hpp"
#include "avt/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace avt::data {
namespace {

constexpr const char* kManifestHeader =
    "sample_id,subject_id,audio_path,visible_path,thermal_path,b_audio,b_visible,b_thermal,split";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

Validity validity_for_missing(std::initializer_list<Modality> missing) {
  Validity v;
  for (Modality m : missing) v[m] = false;
  return v;
}

std::vector<Validity> ablation_patterns(const AblationOptions& options) {
  std::vector<Validity> patterns{Validity{}, validity_for_missing({Modality::Audio}),
                                 validity_for_missing({Modality::Visible}), validity_for_missing({Modality::Thermal})};
  if (options.multi_missing) {
    patterns.push_back(validity_for_missing({Modality::Audio, Modality::Visible}));
    patterns.push_back(validity_for_missing({Modality::Audio, Modality::Thermal}));
    patterns.push_back(validity_for_missing({Modality::Visible, Modality::Thermal}));
  }
  return patterns;
}

std::vector<int> shape_of(Modality m, const InputShape& shape) {
  switch (m) {
    case Modality::Audio:
      return {shape.n_mels, 1, shape.n_frames};
    case Modality::Visible:
      return {shape.visible_channels, shape.image_size, shape.image_size};
    case Modality::Thermal:
      return {shape.thermal_channels, shape.image_size, shape.image_size};
  }
  return {};
}

// Sum of oriented gratings: a cheap subject-specific low-frequency texture.
struct Grating {
  double fx, fy, phase;
};

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Audio:
      return "audio";
    case Modality::Visible:
      return "visible";
    case Modality::Thermal:
      return "thermal";
  }
  return "?";
}

int Validity::missing_count() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), false));
}

std::string Validity::code() const {
  std::string out;
  for (bool f : flags) out.push_back(f ? '1' : '0');
  return out;
}

FeatureMap& ModalitySample::tensor(Modality m) {
  switch (m) {
    case Modality::Audio:
      return spectrogram;
    case Modality::Visible:
      return visible;
    case Modality::Thermal:
      break;
  }
  return thermal;
}

const FeatureMap& ModalitySample::tensor(Modality m) const {
  return const_cast<ModalitySample*>(this)->tensor(m);
}

FeatureMap zero_tensor(Modality m, const InputShape& shape) {
  const auto dims = shape_of(m, shape);
  return FeatureMap(dims[0], dims[1], dims[2]);
}

void validate_sample(const ModalitySample& sample, const InputShape& shape) {
  if (sample.validity.missing_count() > 1)
    throw InputError("sample " + sample.sample_id + " has more than one missing modality");
  for (Modality m : kModalities) {
    const FeatureMap& t = sample.tensor(m);
    const auto dims = shape_of(m, shape);
    if (t.channels() != dims[0] || t.height != dims[1] || t.width != dims[2])
      throw InputError("sample " + sample.sample_id + ": " + std::string(modality_name(m)) + " tensor has wrong shape");
    if (!sample.validity[m] && !t.all_zero())
      throw InputError("sample " + sample.sample_id + ": missing " + std::string(modality_name(m)) +
                       " tensor is not all-zero");
  }
}

std::string ablation_suffix(const Validity& validity) {
  if (validity.all_valid()) return "";
  std::string suffix = "-miss";
  for (Modality m : kModalities)
    if (!validity[m]) suffix += "_" + std::string(modality_name(m));
  return suffix;
}

std::vector<ModalitySample> make_ablations(const ModalitySample& sample, const AblationOptions& options) {
  if (!sample.validity.all_valid())
    throw InputError("make_ablations: sample " + sample.sample_id + " is already missing a modality");
  std::vector<ModalitySample> out;
  for (const Validity& pattern : ablation_patterns(options)) {
    ModalitySample copy = sample;
    copy.validity = pattern;
    copy.sample_id = sample.sample_id + ablation_suffix(pattern);
    for (Modality m : kModalities)
      if (!pattern[m]) copy.tensor(m).data.setZero();
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<ManifestEntry> make_ablations(const ManifestEntry& entry, const AblationOptions& options) {
  if (!entry.validity.all_valid())
    throw InputError("make_ablations: entry " + entry.sample_id + " is already missing a modality");
  std::vector<ManifestEntry> out;
  for (const Validity& pattern : ablation_patterns(options)) {
    ManifestEntry copy = entry;
    copy.validity = pattern;
    copy.sample_id = entry.sample_id + ablation_suffix(pattern);
    for (Modality m : kModalities)
      if (!pattern[m]) copy.paths[index_of(m)].clear();
    out.push_back(std::move(copy));
  }
  return out;
}

DatasetManifest ablate_manifest(const DatasetManifest& manifest, const AblationOptions& options) {
  DatasetManifest out;
  out.n_classes = manifest.n_classes;
  out.seed = manifest.seed;
  for (const auto& entry : manifest.entries)
    for (auto& row : make_ablations(entry, options)) out.entries.push_back(std::move(row));
  return out;
}

std::string_view split_name(Split split) { return split == Split::Train ? "train" : "test"; }

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (!ids.insert(e.sample_id).second) throw InputError("duplicate sample_id " + e.sample_id);
    if (e.subject_id < 0 || e.subject_id >= n_classes)
      throw InputError("sample " + e.sample_id + " has subject_id outside [0, n_classes)");
    for (Modality m : kModalities)
      if (e.validity[m] == e.paths[index_of(m)].empty())
        throw InputError("sample " + e.sample_id + ": path / validity mismatch for " + std::string(modality_name(m)));
  }
}

DatasetManifest DatasetManifest::subset(Split split) const {
  DatasetManifest out;
  out.n_classes = n_classes;
  out.seed = seed;
  for (const auto& e : entries)
    if (e.split == split) out.entries.push_back(e);
  return out;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("split_dataset: test_fraction must lie in (0, 1)");

  std::map<int, std::size_t> per_subject;
  for (const auto& e : manifest.entries) ++per_subject[e.subject_id];
  for (const auto& [subject, count] : per_subject)
    if (count < 2) throw StratificationError("subject " + std::to_string(subject) + " has fewer than 2 samples");

  std::map<std::pair<int, std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    strata[{e.subject_id, e.validity.code()}].push_back(i);
  }

  DatasetManifest out = manifest;
  out.seed = seed;
  for (auto& e : out.entries) e.split = Split::Train;

  Rng rng(seed);
  std::map<int, int> subject_tests;
  for (auto& [key, indices] : strata) {
    std::shuffle(indices.begin(), indices.end(), rng);
    const auto n = static_cast<long>(indices.size());
    if (n < 2) continue;
    const long n_test = std::clamp<long>(std::lround(static_cast<double>(n) * test_fraction), 1, n - 1);
    for (long k = 0; k < n_test; ++k) out.entries[indices[k]].split = Split::Test;
    subject_tests[key.first] += static_cast<int>(n_test);
  }

  // Subjects whose strata are all singletons still need one test sample.
  for (const auto& [subject, count] : per_subject) {
    if (subject_tests[subject] > 0) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < out.entries.size(); ++i)
      if (out.entries[i].subject_id == subject) candidates.push_back(i);
    out.entries[candidates[rng() % candidates.size()]].split = Split::Test;
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : manifest.entries) {
    out << e.sample_id << ',' << e.subject_id;
    for (const auto& p : e.paths) out << ',' << p;
    for (bool f : e.validity.flags) out << ',' << (f ? 1 : 0);
    out << ',' << split_name(e.split) << '\n';
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path, int n_classes, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty manifest " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "sample_id" || header[1] != "subject_id")
    throw IoError("manifest " + path.string() + " lacks the required header row");

  DatasetManifest manifest;
  manifest.seed = seed;
  int max_label = -1;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5 && f.size() != 9)
      throw IoError("manifest line " + std::to_string(lineno) + ": expected 5 or 9 columns");
    ManifestEntry e;
    e.sample_id = f[0];
    try {
      e.subject_id = std::stoi(f[1]);
    } catch (const std::exception&) {
      throw IoError("manifest line " + std::to_string(lineno) + ": bad subject_id");
    }
    for (int m = 0; m < 3; ++m) e.paths[m] = f[2 + m];
    if (f.size() == 9) {
      for (int m = 0; m < 3; ++m) {
        if (f[5 + m] != "0" && f[5 + m] != "1")
          throw IoError("manifest line " + std::to_string(lineno) + ": validity flags must be 0/1");
        e.validity.flags[m] = f[5 + m] == "1";
      }
      if (f[8] == "train")
        e.split = Split::Train;
      else if (f[8] == "test")
        e.split = Split::Test;
      else
        throw IoError("manifest line " + std::to_string(lineno) + ": split must be train or test");
    }
    max_label = std::max(max_label, e.subject_id);
    manifest.entries.push_back(std::move(e));
  }
  manifest.n_classes = n_classes > 0 ? n_classes : max_label + 1;
  manifest.validate();
  return manifest;
}

std::string tensor_path(const std::string& sample_id, Modality m) {
  return "tensors/" + sample_id + "." + std::string(modality_name(m)) + ".npy";
}

SyntheticDataset generate_synthetic_dataset(const SyntheticOptions& options) {
  if (options.n_subjects < 2) throw InputError("generate_synthetic_dataset: need at least 2 subjects");
  if (options.samples_per_subject < 4) throw InputError("generate_synthetic_dataset: need at least 4 samples per subject");

  const InputShape& shape = options.shape;
  const int size = shape.image_size;
  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  audio::LogMelOptions mel;
  mel.n_mels = shape.n_mels;
  mel.n_frames = shape.n_frames;
  const int wave_len = (shape.n_frames - 1) * mel.hop_length;

  struct Identity {
    std::array<double, 3> tone_hz, tone_amp;
    std::array<std::array<double, 3>, 3> colour_weights;
    std::array<double, 3> base_colour;
    std::array<Grating, 3> gratings;
    std::array<std::array<double, 4>, 3> blobs;  // cx, cy, sigma, amplitude
  };

  std::vector<Identity> identities(options.n_subjects);
  for (auto& id : identities) {
    for (int k = 0; k < 3; ++k) {
      id.tone_hz[k] = 150.0 * std::pow(8000.0 / 150.0, unit(rng));
      id.tone_amp[k] = 0.3 + 0.7 * unit(rng);
      id.base_colour[k] = 0.3 + 0.4 * unit(rng);
      for (int c = 0; c < 3; ++c) id.colour_weights[k][c] = 2.0 * unit(rng) - 1.0;
      double fx = 0, fy = 0;
      while (fx == 0 && fy == 0) {
        fx = std::floor(7.0 * unit(rng)) - 3.0;
        fy = std::floor(7.0 * unit(rng)) - 3.0;
      }
      id.gratings[k] = {fx, fy, 2.0 * std::numbers::pi * unit(rng)};
      id.blobs[k] = {0.2 + 0.6 * unit(rng), 0.2 + 0.6 * unit(rng), 0.08 + 0.12 * unit(rng), 0.3 + 0.4 * unit(rng)};
    }
  }

  SyntheticDataset out;
  out.manifest.n_classes = options.n_subjects;
  out.manifest.seed = options.seed;
  std::vector<double> wave(wave_len);
  for (int s = 0; s < options.n_subjects; ++s) {
    const Identity& id = identities[s];
    for (int r = 0; r < options.samples_per_subject; ++r) {
      ModalitySample sample;
      char name[32];
      std::snprintf(name, sizeof(name), "s%03d_r%03d", s, r);
      sample.sample_id = name;
      sample.subject_id = s;

      // audio: subject tone stack, per-sample pitch/level jitter plus white noise
      {
        const double a = options.audio_noise;
        std::array<double, 3> hz, amp, phase;
        for (int k = 0; k < 3; ++k) {
          hz[k] = id.tone_hz[k] * (1.0 + 0.03 * a * gauss(rng));
          amp[k] = id.tone_amp[k] * std::max(0.05, 1.0 + 0.3 * a * gauss(rng));
          phase[k] = 2.0 * std::numbers::pi * a * unit(rng);
        }
        const double distractor_hz = 150.0 * std::pow(8000.0 / 150.0, unit(rng));
        const double distractor_amp = 0.5 * a * unit(rng);
        const double noise_sd = 0.05 * a;
        for (int i = 0; i < wave_len; ++i) {
          const double t = static_cast<double>(i) / mel.sample_rate;
          double v = distractor_amp * std::sin(2.0 * std::numbers::pi * distractor_hz * t);
          for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(2.0 * std::numbers::pi * hz[k] * t + phase[k]);
          wave[i] = v + (noise_sd > 0 ? noise_sd * gauss(rng) : 0.0);
        }
        Mat spec = audio::compute_log_mel_spectrogram(wave, mel.sample_rate, mel);
        audio::standardize(spec);
        sample.spectrogram = FeatureMap(shape.n_mels, 1, shape.n_frames);
        sample.spectrogram.data = spec;
      }

      // visible: coloured gratings, per-sample phase / brightness jitter and pixel noise
      {
        const double a = options.visible_noise;
        std::array<double, 3> phase_jitter;
        for (auto& p : phase_jitter) p = 0.6 * a * gauss(rng);
        const double brightness = 0.05 * a * gauss(rng);
        sample.visible = FeatureMap(shape.visible_channels, size, size);
        for (int c = 0; c < shape.visible_channels; ++c) {
          for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
              double v = id.base_colour[c % 3] + brightness;
              for (int k = 0; k < 3; ++k) {
                const Grating& g = id.gratings[k];
                const double arg = 2.0 * std::numbers::pi * (g.fx * x + g.fy * y) / size + g.phase + phase_jitter[k];
                v += 0.15 * id.colour_weights[k][c % 3] * std::sin(arg);
              }
              v += a > 0 ? 0.08 * a * gauss(rng) : 0.0;
              sample.visible.data(c, y * size + x) = std::clamp(v, 0.0, 1.0);
            }
          }
        }
      }

      // thermal: gaussian heat blobs, per-sample position / intensity jitter and pixel noise
      {
        const double a = options.thermal_noise;
        std::array<std::array<double, 4>, 3> blobs = id.blobs;
        for (auto& b : blobs) {
          b[0] += 0.04 * a * gauss(rng);
          b[1] += 0.04 * a * gauss(rng);
          b[3] *= std::max(0.1, 1.0 + 0.2 * a * gauss(rng));
        }
        sample.thermal = FeatureMap(shape.thermal_channels, size, size);
        for (int c = 0; c < shape.thermal_channels; ++c) {
          for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
              const double fx = (x + 0.5) / size, fy = (y + 0.5) / size;
              double v = 0.1;
              for (const auto& b : blobs) {
                const double d2 = (fx - b[0]) * (fx - b[0]) + (fy - b[1]) * (fy - b[1]);
                v += b[3] * std::exp(-d2 / (2.0 * b[2] * b[2]));
              }
              v += a > 0 ? 0.06 * a * gauss(rng) : 0.0;
              sample.thermal.data(c, y * size + x) = std::clamp(v, 0.0, 1.0);
            }
          }
        }
      }

      ManifestEntry entry;
      entry.sample_id = sample.sample_id;
      entry.subject_id = s;
      for (Modality m : kModalities) entry.paths[index_of(m)] = tensor_path(sample.sample_id, m);
      out.manifest.entries.push_back(std::move(entry));
      out.samples.push_back(std::move(sample));
    }
  }
  return out;
}

InMemoryLoader::InMemoryLoader(const std::vector<ModalitySample>& samples, InputShape shape) : shape_(shape) {
  for (const auto& s : samples) {
    for (Modality m : kModalities) {
      if (!s.validity[m]) continue;
      tensors_[tensor_path(s.sample_id, m)] = std::make_shared<const FeatureMap>(s.tensor(m));
    }
  }
}

ModalitySample InMemoryLoader::load(const ManifestEntry& entry) const {
  ModalitySample sample;
  sample.sample_id = entry.sample_id;
  sample.subject_id = entry.subject_id;
  sample.validity = entry.validity;
  for (Modality m : kModalities) {
    if (!entry.validity[m]) {
      sample.tensor(m) = zero_tensor(m, shape_);
      continue;
    }
    const auto it = tensors_.find(entry.paths[index_of(m)]);
    if (it == tensors_.end()) throw IoError("no in-memory tensor for " + entry.paths[index_of(m)]);
    sample.tensor(m) = *it->second;
  }
  return sample;
}

FileLoader::FileLoader(std::filesystem::path root, InputShape shape) : root_(std::move(root)), shape_(shape) {}

ModalitySample FileLoader::load(const ManifestEntry& entry) const {
  ModalitySample sample;
  sample.sample_id = entry.sample_id;
  sample.subject_id = entry.subject_id;
  sample.validity = entry.validity;
  for (Modality m : kModalities) {
    sample.tensor(m) = entry.validity[m] ? read_tensor(root_ / entry.paths[index_of(m)], m, shape_)
                                         : zero_tensor(m, shape_);
  }
  return sample;
}

FeatureMap read_tensor(const std::filesystem::path& path, Modality m, const InputShape& shape) {
  const io::NpyArray array = io::read_npy(path);
  FeatureMap out = zero_tensor(m, shape);
  if (m == Modality::Audio) {
    if (array.shape.size() != 2 || static_cast<int>(array.shape[0]) != shape.n_mels ||
        static_cast<int>(array.shape[1]) != shape.n_frames)
      throw IoError(path.string() + ": expected a " + std::to_string(shape.n_mels) + "x" +
                    std::to_string(shape.n_frames) + " spectrogram");
    for (int r = 0; r < shape.n_mels; ++r)
      for (int c = 0; c < shape.n_frames; ++c) out.data(r, c) = array.values[r * shape.n_frames + c];
    return out;
  }
  const int channels = out.channels();
  const int size = shape.image_size;
  const bool hwc = array.shape.size() == 3 && static_cast<int>(array.shape[0]) == size &&
                   static_cast<int>(array.shape[1]) == size && static_cast<int>(array.shape[2]) == channels;
  const bool hw = channels == 1 && array.shape.size() == 2 && static_cast<int>(array.shape[0]) == size &&
                  static_cast<int>(array.shape[1]) == size;
  if (!hwc && !hw)
    throw IoError(path.string() + ": expected a " + std::to_string(size) + "x" + std::to_string(size) + "x" +
                  std::to_string(channels) + " image");
  for (int p = 0; p < size * size; ++p)
    for (int c = 0; c < channels; ++c) out.data(c, p) = array.values[p * channels + c];
  return out;
}

void write_tensor(const std::filesystem::path& path, const FeatureMap& tensor, Modality m) {
  std::vector<double> values(tensor.data.size());
  if (m == Modality::Audio) {
    for (int r = 0; r < tensor.channels(); ++r)
      for (int c = 0; c < tensor.width; ++c) values[r * tensor.width + c] = tensor.data(r, c);
    io::write_npy(path, values, {static_cast<std::size_t>(tensor.channels()), static_cast<std::size_t>(tensor.width)});
    return;
  }
  const int channels = tensor.channels();
  const int pixels = tensor.height * tensor.width;
  for (int p = 0; p < pixels; ++p)
    for (int c = 0; c < channels; ++c) values[p * channels + c] = tensor.data(c, p);
  io::write_npy(path, values,
                {static_cast<std::size_t>(tensor.height), static_cast<std::size_t>(tensor.width),
                 static_cast<std::size_t>(channels)});
}

void write_dataset_info(const std::filesystem::path& path, const DatasetInfo& info) {
  io::KeyValueConfig cfg;
  cfg.set("n_classes", info.n_classes);
  cfg.set("seed", info.seed);
  cfg.set("n_mels", info.shape.n_mels);
  cfg.set("n_frames", info.shape.n_frames);
  cfg.set("image_size", info.shape.image_size);
  cfg.set("visible_channels", info.shape.visible_channels);
  cfg.set("thermal_channels", info.shape.thermal_channels);
  cfg.set("test_fraction", info.test_fraction);
  cfg.save(path);
}

DatasetInfo read_dataset_info(const std::filesystem::path& path) {
  const auto cfg = io::KeyValueConfig::load(path);
  DatasetInfo info;
  info.n_classes = static_cast<int>(cfg.get_int("n_classes", 0));
  info.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  info.shape.n_mels = static_cast<int>(cfg.get_int("n_mels", info.shape.n_mels));
  info.shape.n_frames = static_cast<int>(cfg.get_int("n_frames", info.shape.n_frames));
  info.shape.image_size = static_cast<int>(cfg.get_int("image_size", info.shape.image_size));
  info.shape.visible_channels = static_cast<int>(cfg.get_int("visible_channels", info.shape.visible_channels));
  info.shape.thermal_channels = static_cast<int>(cfg.get_int("thermal_channels", info.shape.thermal_channels));
  info.test_fraction = cfg.get_double("test_fraction", info.test_fraction);
  return info;
}

PreparedDataset prepare_synthetic(const SyntheticOptions& options, double test_fraction) {
  SyntheticDataset synth = generate_synthetic_dataset(options);
  PreparedDataset out;
  out.manifest = split_dataset(ablate_manifest(synth.manifest), test_fraction, options.seed);
  out.loader = std::make_shared<InMemoryLoader>(synth.samples, options.shape);
  return out;
}

void save_synthetic(const std::filesystem::path& root, const SyntheticDataset& dataset, double test_fraction) {
  std::filesystem::create_directories(root / "tensors");
  for (const auto& sample : dataset.samples)
    for (Modality m : kModalities) write_tensor(root / tensor_path(sample.sample_id, m), sample.tensor(m), m);
  const DatasetManifest manifest =
      split_dataset(ablate_manifest(dataset.manifest), test_fraction, dataset.manifest.seed);
  write_manifest(root / "manifest.csv", manifest);
  InputShape shape;
  if (!dataset.samples.empty()) {
    const auto& s = dataset.samples.front();
    shape = {s.spectrogram.channels(), s.spectrogram.width, s.visible.height, s.visible.channels(),
             s.thermal.channels()};
  }
  write_dataset_info(root / "dataset.cfg", {manifest.n_classes, manifest.seed, shape, test_fraction});
}

PreparedDataset open_dataset(const std::filesystem::path& root) {
  const DatasetInfo info = read_dataset_info(root / "dataset.cfg");
  PreparedDataset out;
  out.manifest = read_manifest(root / "manifest.csv", info.n_classes, info.seed);
  out.loader = std::make_shared<FileLoader>(root, info.shape);
  return out;
}

DatasetManifest ingest_dataset(const std::filesystem::path& input, const std::filesystem::path& output,
                               const IngestOptions& options) {
  const DatasetManifest source = read_manifest(input / "manifest.csv");
  std::filesystem::create_directories(output / "tensors");

  audio::LogMelOptions mel;
  mel.n_mels = options.shape.n_mels;
  mel.n_frames = options.shape.n_frames;
  mel.resample_input = options.resample_audio;

  DatasetManifest base;
  base.n_classes = source.n_classes;
  base.seed = options.seed;
  for (const auto& entry : source.entries) {
    if (!entry.validity.all_valid()) throw InputError("ingest: input sample " + entry.sample_id + " must be fully valid");
    ManifestEntry out_entry = entry;
    for (Modality m : kModalities) {
      const auto src = input / entry.paths[index_of(m)];
      FeatureMap tensor;
      if (m == Modality::Audio) {
        const io::NpyArray array = io::read_npy(src);
        Mat spec;
        if (array.shape.size() == 1) {
          spec = audio::compute_log_mel_spectrogram(array.values, options.audio_sample_rate, mel);
        } else if (array.shape.size() == 2 && static_cast<int>(array.shape[0]) == mel.n_mels) {
          spec = Mat::Zero(mel.n_mels, mel.n_frames);
          const int frames = std::min<int>(mel.n_frames, static_cast<int>(array.shape[1]));
          for (int r = 0; r < mel.n_mels; ++r)
            for (int c = 0; c < frames; ++c) spec(r, c) = array.values[r * array.shape[1] + c];
        } else {
          throw IoError(src.string() + ": audio must be a 1-D waveform or an n_mels x T spectrogram");
        }
        audio::standardize(spec);
        tensor = FeatureMap(mel.n_mels, 1, mel.n_frames);
        tensor.data = spec;
      } else {
        tensor = read_tensor(src, m, options.shape);
      }
      out_entry.paths[index_of(m)] = tensor_path(entry.sample_id, m);
      write_tensor(output / out_entry.paths[index_of(m)], tensor, m);
    }
    base.entries.push_back(std::move(out_entry));
  }

  const DatasetManifest manifest = split_dataset(ablate_manifest(base), options.test_fraction, options.seed);
  write_manifest(output / "manifest.csv", manifest);
  write_dataset_info(output / "dataset.cfg", {manifest.n_classes, manifest.seed, options.shape, options.test_fraction});
  return manifest;
}

}  // namespace avt::data
