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

#include "avt/dataset.hpp"
#include "avt/io.hpp"
#include "avt/losses.hpp"
#include "avt/variants.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace avt::train {

struct TrainConfig {
  int phase1_epochs = 50;
  int phase2_epochs = 25;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double epsilon = 1e-7;
  std::uint64_t seed = 0;
  bool toy_scale = false;
  /// Phase-1 batches are built from shuffled runs of `samples_per_class`
  /// same-subject samples; off means plain shuffling.
  bool stratified_batches = true;
  int samples_per_class = 4;
  double margin = losses::kDefaultMargin;
  /// Phase-1 checkpoint period in epochs (0 disables periodic saves).
  int checkpoint_every = 10;

  void validate() const;
  io::KeyValueConfig to_kv() const;
  static TrainConfig from_kv(const io::KeyValueConfig& kv);
};

/// Index batches for one epoch. Deterministic in (labels, seed); a trailing
/// batch of one sample is merged into its predecessor.
std::vector<std::vector<std::size_t>> make_batches(const IntVec& labels, int batch_size, bool stratified,
                                                   int samples_per_class, std::uint64_t seed);

/// Per-epoch means of the loss terms over the steps that ran.
struct EpochRecord {
  int epoch = 0;
  losses::LossBreakdown loss;
  int steps = 0;
  /// Steps skipped because the batch held a single class.
  int skipped = 0;
  int degenerate_joint = 0;
  double max_grad_norm = 0.0;
  double seconds = 0.0;
  bool finite = true;
};

struct Hooks {
  /// Receives one JSON object per line per epoch.
  std::ostream* log = nullptr;
  /// Phase-1 checkpoints go here as phase1.ckpt; empty disables them.
  std::filesystem::path checkpoint_dir;
  /// Continue from checkpoint_dir/phase1.ckpt when it exists.
  bool resume = false;
  /// Stop after this many epochs in the current call (testing resume); 0 = no limit.
  int stop_after = 0;
};

std::vector<EpochRecord> train_embeddings(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                                          const data::SampleLoader& loader, const TrainConfig& config,
                                          const Hooks& hooks = {});

struct EmbeddingRow {
  std::string sample_id;
  int subject_id = 0;
  data::Validity validity;
  model::EmbeddingBundle bundle;
  /// Non-empty when the sample could not be loaded.
  std::string error;
};

struct EmbeddingTable {
  std::vector<EmbeddingRow> rows;
};

EmbeddingTable export_embeddings(const eval::Pipeline& pipeline, const data::DatasetManifest& manifest,
                                 const data::SampleLoader& loader);
/// CSV: sample_id, subject_id, validity, error, then e_s, e_c, e_t, e_j columns.
void write_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embedding_table(const std::filesystem::path& path);

struct RecognizerHistory {
  std::vector<double> loss;
  /// Accuracy on the training inputs in inference mode at the end of each epoch.
  std::vector<double> accuracy;
  double final_accuracy() const { return accuracy.empty() ? 0.0 : accuracy.back(); }
};

RecognizerHistory train_recognizer(eval::Pipeline& pipeline, const EmbeddingTable& train, int n_classes,
                                   const TrainConfig& config, const Hooks& hooks = {});

/// Feature branches and recognizer trained jointly with cross-entropy for
/// phase1_epochs + phase2_epochs epochs.
RecognizerHistory train_end_to_end(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                                   const data::SampleLoader& loader, const TrainConfig& config,
                                   const Hooks& hooks = {});

struct TrainResult {
  std::vector<EpochRecord> phase1;
  RecognizerHistory phase2;
  EmbeddingTable train_table;
};

/// Both phases for embedding variants, or end-to-end training for E2E.
TrainResult train_pipeline(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                           const data::SampleLoader& loader, const TrainConfig& config, const Hooks& hooks = {});

}  // namespace avt::train
