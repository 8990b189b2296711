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

#include "avt/training.hpp"

#include "avt/checkpoint.hpp"
#include "avt/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace avt::train {
namespace {

using Clock = std::chrono::steady_clock;

Rng epoch_rng(std::uint64_t seed, int epoch, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

int distinct(const IntVec& y) {
  std::set<int> s(y.data(), y.data() + y.size());
  return static_cast<int>(s.size());
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void log_line(std::ostream* log, const nlohmann::json& record) {
  if (log) *log << record.dump() << '\n' << std::flush;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"phase", 1},
          {"epoch", r.epoch},
          {"L_c", r.loss.L_c},
          {"L_t", r.loss.L_t},
          {"L_s", r.loss.L_s},
          {"L_j", r.loss.L_j},
          {"L_total", r.loss.L_total},
          {"steps", r.steps},
          {"skipped", r.skipped},
          {"degenerate_joint", r.degenerate_joint},
          {"max_grad_norm", r.max_grad_norm},
          {"seconds", r.seconds}};
}

// History rows: epoch, L_c, L_t, L_s, L_j, L_total, steps, skipped, degenerate, grad norm, seconds, finite.
constexpr int kHistoryCols = 12;

Mat history_to_matrix(const std::vector<EpochRecord>& history) {
  Mat m(static_cast<Eigen::Index>(history.size()), kHistoryCols);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    m.row(static_cast<Eigen::Index>(i)) << r.epoch, r.loss.L_c, r.loss.L_t, r.loss.L_s, r.loss.L_j, r.loss.L_total,
        r.steps, r.skipped, r.degenerate_joint, r.max_grad_norm, r.seconds, r.finite ? 1.0 : 0.0;
  }
  return m;
}

std::vector<EpochRecord> history_from_matrix(const Mat& m) {
  std::vector<EpochRecord> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    EpochRecord r;
    r.epoch = static_cast<int>(m(i, 0));
    r.loss = {m(i, 1), m(i, 2), m(i, 3), m(i, 4), m(i, 5)};
    r.steps = static_cast<int>(m(i, 6));
    r.skipped = static_cast<int>(m(i, 7));
    r.degenerate_joint = static_cast<int>(m(i, 8));
    r.max_grad_norm = m(i, 9);
    r.seconds = m(i, 10);
    r.finite = m(i, 11) != 0.0;
    out.push_back(r);
  }
  return out;
}

void save_phase1(const std::filesystem::path& path, const nn::ParameterList& params, const nn::Adam& adam,
                 const std::vector<EpochRecord>& history) {
  std::vector<checkpoint::NamedTensor> tensors = checkpoint::snapshot(params);
  for (const auto& s : adam.state()) tensors.push_back({s.name, s.value});
  tensors.push_back({"state/iterations", Mat::Constant(1, 1, static_cast<double>(adam.iterations()))});
  tensors.push_back({"state/history", history_to_matrix(history)});
  const auto tmp = path.string() + ".tmp";
  checkpoint::save(tmp, tensors);
  std::filesystem::rename(tmp, path);
}

std::vector<EpochRecord> load_phase1(const std::filesystem::path& path, const nn::ParameterList& params,
                                     nn::Adam& adam) {
  const auto tensors = checkpoint::load(path);
  checkpoint::restore(tensors, params);
  std::vector<nn::Parameter> state;
  long long iterations = 0;
  std::vector<EpochRecord> history;
  for (const auto& t : tensors) {
    if (t.name.rfind("adam.", 0) == 0) state.emplace_back(t.name, t.value, false);
    if (t.name == "state/iterations") iterations = static_cast<long long>(t.value(0, 0));
    if (t.name == "state/history") history = history_from_matrix(t.value);
  }
  adam.load_state(state, iterations);
  return history;
}

std::vector<data::ModalitySample> load_batch(const data::DatasetManifest& manifest,
                                             const std::vector<std::size_t>& indices,
                                             const data::SampleLoader& loader) {
  std::vector<data::ModalitySample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(loader.load(manifest.entries[i]));
  return out;
}

std::vector<const data::ModalitySample*> pointers(const std::vector<data::ModalitySample>& samples) {
  std::vector<const data::ModalitySample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

IntVec labels_of(const data::DatasetManifest& manifest) {
  IntVec y(static_cast<Eigen::Index>(manifest.size()));
  for (std::size_t i = 0; i < manifest.size(); ++i) y(static_cast<Eigen::Index>(i)) = manifest.entries[i].subject_id;
  return y;
}

bool all_finite(const nn::ParameterList& params) {
  for (const auto* p : params)
    if (!p->grad.allFinite()) return false;
  return true;
}

void check_classes(const IntVec& labels, int n_classes) {
  std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) < 0 || labels(i) >= n_classes) throw ConfigError("label outside [0, n_classes)");
    seen[static_cast<std::size_t>(labels(i))] = true;
  }
  for (int c = 0; c < n_classes; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw ConfigError("class " + std::to_string(c) + " is absent from the training data");
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  if (phase1_epochs < 1 || phase2_epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 4) throw ConfigError("batch_size must be >= 4");
  if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

io::KeyValueConfig TrainConfig::to_kv() const {
  io::KeyValueConfig kv;
  kv.set("train.phase1_epochs", phase1_epochs);
  kv.set("train.phase2_epochs", phase2_epochs);
  kv.set("train.batch_size", batch_size);
  kv.set("train.learning_rate", learning_rate);
  kv.set("train.beta1", beta1);
  kv.set("train.beta2", beta2);
  kv.set("train.epsilon", epsilon);
  kv.set("train.seed", std::to_string(seed));
  kv.set("train.toy_scale", toy_scale);
  kv.set("train.stratified_batches", stratified_batches);
  kv.set("train.samples_per_class", samples_per_class);
  kv.set("train.margin", margin);
  kv.set("train.checkpoint_every", checkpoint_every);
  return kv;
}

TrainConfig TrainConfig::from_kv(const io::KeyValueConfig& kv) {
  TrainConfig c;
  c.phase1_epochs = static_cast<int>(kv.get_int("train.phase1_epochs", c.phase1_epochs));
  c.phase2_epochs = static_cast<int>(kv.get_int("train.phase2_epochs", c.phase2_epochs));
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.learning_rate = kv.get_double("train.learning_rate", c.learning_rate);
  c.beta1 = kv.get_double("train.beta1", c.beta1);
  c.beta2 = kv.get_double("train.beta2", c.beta2);
  c.epsilon = kv.get_double("train.epsilon", c.epsilon);
  c.seed = std::stoull(kv.get_string("train.seed", std::to_string(c.seed)));
  c.toy_scale = kv.get_bool("train.toy_scale", c.toy_scale);
  c.stratified_batches = kv.get_bool("train.stratified_batches", c.stratified_batches);
  c.samples_per_class = static_cast<int>(kv.get_int("train.samples_per_class", c.samples_per_class));
  c.margin = kv.get_double("train.margin", c.margin);
  c.checkpoint_every = static_cast<int>(kv.get_int("train.checkpoint_every", c.checkpoint_every));
  c.validate();
  return c;
}

std::vector<std::vector<std::size_t>> make_batches(const IntVec& labels, int batch_size, bool stratified,
                                                   int samples_per_class, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> order;
  if (!stratified) {
    order.resize(static_cast<std::size_t>(labels.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (Eigen::Index i = 0; i < labels.size(); ++i) by_class[labels(i)].push_back(static_cast<std::size_t>(i));
    std::vector<std::vector<std::size_t>> runs;
    for (auto& [label, members] : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t at = 0; at < members.size(); at += static_cast<std::size_t>(samples_per_class)) {
        const auto end = std::min(members.size(), at + static_cast<std::size_t>(samples_per_class));
        runs.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(at),
                          members.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    std::shuffle(runs.begin(), runs.end(), rng);
    for (const auto& r : runs) order.insert(order.end(), r.begin(), r.end());
  }

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), at + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

std::vector<EpochRecord> train_embeddings(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                                          const data::SampleLoader& loader, const TrainConfig& config,
                                          const Hooks& hooks) {
  config.validate();
  const eval::VariantConfig& variant = pipeline.variant();
  if (variant.end_to_end) throw ConfigError(variant.name + " has no embedding phase");
  if (train.size() == 0) throw InputError("train_embeddings: empty training manifest");

  model::AVTNet& net = pipeline.net();
  const nn::ParameterList params = net.parameters();
  nn::Adam adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);

  std::vector<EpochRecord> history;
  const auto ckpt = hooks.checkpoint_dir.empty() ? std::filesystem::path{} : hooks.checkpoint_dir / "phase1.ckpt";
  if (hooks.resume && !ckpt.empty() && std::filesystem::exists(ckpt)) history = load_phase1(ckpt, params, adam);
  if (!ckpt.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);

  const IntVec labels = labels_of(train);
  const auto& arch = variant.architecture;
  losses::TotalLossOptions loss_options;
  loss_options.individual = variant.individual_loss;
  loss_options.margin = config.margin;

  int ran = 0;
  for (int epoch = static_cast<int>(history.size()) + 1; epoch <= config.phase1_epochs; ++epoch) {
    if (hooks.stop_after > 0 && ran == hooks.stop_after) break;
    const auto start = Clock::now();
    Rng rng = epoch_rng(config.seed, epoch, 1);
    const auto batches = make_batches(labels, config.batch_size, config.stratified_batches, config.samples_per_class, rng());

    EpochRecord record;
    record.epoch = epoch;
    for (const auto& indices : batches) {
      IntVec y(static_cast<Eigen::Index>(indices.size()));
      for (std::size_t i = 0; i < indices.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels(static_cast<Eigen::Index>(indices[i]));
      if (distinct(y) < 2) {
        ++record.skipped;
        continue;
      }
      const auto samples = load_batch(train, indices, loader);
      const model::Embeddings e = net.forward(pointers(samples));

      std::array<mining::MiniBatch, 3> individual;
      std::array<const mining::MiniBatch*, 3> present{nullptr, nullptr, nullptr};
      if (arch.individual) {
        for (data::Modality m : data::kModalities) {
          if (!arch.enabled(m)) continue;
          const int k = data::index_of(m);
          IntVec b(y.size());
          for (std::size_t i = 0; i < samples.size(); ++i) b(static_cast<Eigen::Index>(i)) = samples[i].validity[m] ? 1 : 0;
          individual[static_cast<std::size_t>(k)] = {e.individual[static_cast<std::size_t>(k)], y, b};
          present[static_cast<std::size_t>(k)] = &individual[static_cast<std::size_t>(k)];
        }
      }
      mining::MiniBatch joint;
      const mining::MiniBatch* joint_ptr = nullptr;
      if (arch.joint != model::JointKind::None && variant.joint_loss == eval::JointLoss::TripletHard) {
        joint = {e.joint, y, IntVec::Ones(y.size())};
        joint_ptr = &joint;
      }

      losses::TotalLoss total = losses::total_loss(present[0], present[1], present[2], joint_ptr, loss_options);
      Mat d_joint = total.grad_joint;
      if (arch.joint != model::JointKind::None && variant.joint_loss == eval::JointLoss::TripletPrototypical) {
        const losses::LossValue p = eval::triplet_prototypical_loss(e.joint, y, config.margin);
        total.breakdown.L_j = p.value;
        total.breakdown.L_total += p.value;
        d_joint = p.grad;
      }
      if (total.joint_degenerate) ++record.degenerate_joint;

      adam.zero_grad();
      net.backward({total.grad_audio, total.grad_visible, total.grad_thermal}, d_joint);
      const double norm = nn::gradient_norm(params);
      const bool finite = std::isfinite(total.breakdown.L_total) && all_finite(params);
      record.finite = record.finite && finite;
      if (!finite) continue;
      record.max_grad_norm = std::max(record.max_grad_norm, norm);
      adam.step();

      ++record.steps;
      record.loss.L_c += total.breakdown.L_c;
      record.loss.L_t += total.breakdown.L_t;
      record.loss.L_s += total.breakdown.L_s;
      record.loss.L_j += total.breakdown.L_j;
      record.loss.L_total += total.breakdown.L_total;
    }
    if (record.steps > 0) {
      const double n = record.steps;
      record.loss = {record.loss.L_c / n, record.loss.L_t / n, record.loss.L_s / n, record.loss.L_j / n,
                     record.loss.L_total / n};
    }
    record.seconds = seconds_since(start);
    history.push_back(record);
    log_line(hooks.log, to_json(record));
    ++ran;

    const bool periodic = config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0;
    if (!ckpt.empty() && (periodic || epoch == config.phase1_epochs)) save_phase1(ckpt, params, adam, history);
  }
  return history;
}

EmbeddingTable export_embeddings(const eval::Pipeline& pipeline, const data::DatasetManifest& manifest,
                                 const data::SampleLoader& loader) {
  EmbeddingTable table;
  table.rows.resize(manifest.size());
  constexpr std::size_t kChunk = 32;
  for (std::size_t at = 0; at < manifest.size(); at += kChunk) {
    std::vector<data::ModalitySample> samples;
    std::vector<std::size_t> rows;
    for (std::size_t i = at; i < std::min(manifest.size(), at + kChunk); ++i) {
      const auto& entry = manifest.entries[i];
      EmbeddingRow& row = table.rows[i];
      row.sample_id = entry.sample_id;
      row.subject_id = entry.subject_id;
      row.validity = entry.validity;
      try {
        samples.push_back(loader.load(entry));
        rows.push_back(i);
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
    }
    if (samples.empty()) continue;
    const model::Embeddings e = pipeline.net().infer(pointers(samples));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      model::EmbeddingBundle& b = table.rows[rows[j]].bundle;
      const auto r = static_cast<Eigen::Index>(j);
      if (e.individual[0].size() > 0) b.audio = e.individual[0].row(r).transpose();
      if (e.individual[1].size() > 0) b.visible = e.individual[1].row(r).transpose();
      if (e.individual[2].size() > 0) b.thermal = e.individual[2].row(r).transpose();
      if (e.joint.size() > 0) b.joint = e.joint.row(r).transpose();
    }
  }
  return table;
}

void write_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  Eigen::Index widths[4] = {0, 0, 0, 0};
  for (const auto& r : table.rows) {
    if (!r.error.empty()) continue;
    widths[0] = r.bundle.audio.size();
    widths[1] = r.bundle.visible.size();
    widths[2] = r.bundle.thermal.size();
    widths[3] = r.bundle.joint.size();
    break;
  }
  const char prefixes[4] = {'s', 'c', 't', 'j'};
  out << "sample_id,subject_id,validity,error";
  for (int p = 0; p < 4; ++p)
    for (Eigen::Index i = 0; i < widths[p]; ++i) out << ',' << prefixes[p] << i;
  out << '\n';
  out.precision(17);
  for (const auto& r : table.rows) {
    out << r.sample_id << ',' << r.subject_id << ',' << r.validity.code() << ',' << sanitize(r.error);
    const Vec* parts[4] = {&r.bundle.audio, &r.bundle.visible, &r.bundle.thermal, &r.bundle.joint};
    for (int p = 0; p < 4; ++p)
      for (Eigen::Index i = 0; i < widths[p]; ++i) {
        out << ',';
        if (r.error.empty()) out << (*parts[p])(i);
      }
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

EmbeddingTable read_embedding_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "sample_id") throw IoError(path.string() + ": bad embedding table header");
  Eigen::Index widths[4] = {0, 0, 0, 0};
  const std::string prefixes = "scjt";
  for (std::size_t c = 4; c < header.size(); ++c) {
    switch (header[c].front()) {
      case 's': ++widths[0]; break;
      case 'c': ++widths[1]; break;
      case 't': ++widths[2]; break;
      case 'j': ++widths[3]; break;
      default: throw IoError(path.string() + ": unknown column " + header[c]);
    }
  }
  EmbeddingTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw IoError(path.string() + ": ragged row for " + cells.front());
    EmbeddingRow r;
    r.sample_id = cells[0];
    r.subject_id = std::stoi(cells[1]);
    if (cells[2].size() != 3) throw IoError(path.string() + ": bad validity code " + cells[2]);
    for (int m = 0; m < 3; ++m) r.validity.flags[static_cast<std::size_t>(m)] = cells[2][static_cast<std::size_t>(m)] == '1';
    r.error = cells[3];
    if (r.error.empty()) {
      std::size_t c = 4;
      Vec* parts[4] = {&r.bundle.audio, &r.bundle.visible, &r.bundle.thermal, &r.bundle.joint};
      for (int p = 0; p < 4; ++p) {
        parts[p]->resize(widths[p]);
        for (Eigen::Index i = 0; i < widths[p]; ++i) (*parts[p])(i) = std::stod(cells[c++]);
      }
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

RecognizerHistory train_recognizer(eval::Pipeline& pipeline, const EmbeddingTable& train, int n_classes,
                                   const TrainConfig& config, const Hooks& hooks) {
  config.validate();
  std::vector<const EmbeddingRow*> usable;
  for (const auto& r : train.rows)
    if (r.error.empty()) usable.push_back(&r);
  if (usable.empty()) throw InputError("train_recognizer: no usable rows");

  const Eigen::Index width = pipeline.recognizer().input_width();
  Mat x(static_cast<Eigen::Index>(usable.size()), width);
  IntVec y(x.rows());
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const Vec v = pipeline.recognizer_input(usable[i]->bundle);
    if (v.size() != width) throw ConfigError("embedding table width does not match the recognizer");
    x.row(static_cast<Eigen::Index>(i)) = v.transpose();
    y(static_cast<Eigen::Index>(i)) = usable[i]->subject_id;
  }
  check_classes(y, n_classes);

  model::Recognizer& rec = pipeline.recognizer();
  nn::Adam adam(rec.parameters(), config.learning_rate, config.beta1, config.beta2, config.epsilon);
  RecognizerHistory history;
  for (int epoch = 1; epoch <= config.phase2_epochs; ++epoch) {
    const auto start = Clock::now();
    Rng rng = epoch_rng(config.seed, epoch, 2);
    const auto batches = make_batches(y, config.batch_size, false, 1, rng());
    double loss = 0.0;
    for (const auto& indices : batches) {
      Mat xb(static_cast<Eigen::Index>(indices.size()), width);
      IntVec yb(xb.rows());
      for (std::size_t i = 0; i < indices.size(); ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(indices[i]));
        yb(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(indices[i]));
      }
      Mat grad;
      adam.zero_grad();
      loss += nn::softmax_cross_entropy(rec.forward(xb), yb, &grad) * static_cast<double>(indices.size());
      rec.backward(grad);
      adam.step();
    }
    history.loss.push_back(loss / static_cast<double>(x.rows()));
    const IntVec pred = rec.predict(x);
    history.accuracy.push_back(static_cast<double>((pred.array() == y.array()).count()) / static_cast<double>(y.size()));
    log_line(hooks.log, {{"phase", 2},
                         {"epoch", epoch},
                         {"loss", history.loss.back()},
                         {"accuracy", history.accuracy.back()},
                         {"seconds", seconds_since(start)}});
  }
  return history;
}

RecognizerHistory train_end_to_end(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                                   const data::SampleLoader& loader, const TrainConfig& config, const Hooks& hooks) {
  config.validate();
  if (!pipeline.variant().end_to_end) throw ConfigError(pipeline.variant().name + " is not an end-to-end variant");
  const IntVec labels = labels_of(train);
  check_classes(labels, pipeline.recognizer().n_classes());

  model::AVTNet& net = pipeline.net();
  model::Recognizer& rec = pipeline.recognizer();
  nn::ParameterList params = net.parameters();
  for (auto* p : rec.parameters()) params.push_back(p);
  nn::Adam adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  const int feature_dim = net.config().feature_dim;

  RecognizerHistory history;
  const int epochs = config.phase1_epochs + config.phase2_epochs;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto start = Clock::now();
    Rng rng = epoch_rng(config.seed, epoch, 3);
    const auto batches = make_batches(labels, config.batch_size, false, 1, rng());
    double loss = 0.0;
    long long correct = 0;
    for (const auto& indices : batches) {
      const auto samples = load_batch(train, indices, loader);
      IntVec yb(static_cast<Eigen::Index>(indices.size()));
      for (std::size_t i = 0; i < indices.size(); ++i) yb(static_cast<Eigen::Index>(i)) = labels(static_cast<Eigen::Index>(indices[i]));

      adam.zero_grad();
      const model::Embeddings e = net.forward(pointers(samples));
      const Mat logits = rec.forward(model::concat_features(e));
      Mat grad;
      loss += nn::softmax_cross_entropy(logits, yb, &grad) * static_cast<double>(indices.size());
      for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        logits.row(i).maxCoeff(&arg);
        if (arg == yb(i)) ++correct;
      }
      const Mat d_input = rec.backward(grad);
      std::array<Mat, 3> d_features;
      int offset = 0;
      for (data::Modality m : data::kModalities) {
        if (!net.architecture().enabled(m)) continue;
        d_features[static_cast<std::size_t>(data::index_of(m))] = d_input.middleCols(offset, feature_dim);
        offset += feature_dim;
      }
      net.backward({}, Mat(), d_features);
      adam.step();
    }
    const double n = static_cast<double>(train.size());
    history.loss.push_back(loss / n);
    // Running accuracy over the epoch's training batches.
    history.accuracy.push_back(static_cast<double>(correct) / n);
    log_line(hooks.log, {{"phase", "e2e"},
                         {"epoch", epoch},
                         {"loss", history.loss.back()},
                         {"accuracy", history.accuracy.back()},
                         {"seconds", seconds_since(start)}});
  }
  return history;
}

TrainResult train_pipeline(eval::Pipeline& pipeline, const data::DatasetManifest& train,
                           const data::SampleLoader& loader, const TrainConfig& config, const Hooks& hooks) {
  TrainResult result;
  if (pipeline.variant().end_to_end) {
    result.phase2 = train_end_to_end(pipeline, train, loader, config, hooks);
    return result;
  }
  result.phase1 = train_embeddings(pipeline, train, loader, config, hooks);
  result.train_table = export_embeddings(pipeline, train, loader);
  result.phase2 = train_recognizer(pipeline, result.train_table, train.n_classes, config, hooks);
  return result;
}

}  // namespace avt::train
