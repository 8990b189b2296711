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

#include "cli.hpp"

#include "avt/errors.hpp"
#include "avt/evaluation.hpp"
#include "avt/training.hpp"
#include "avt/verify/suite.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace avt::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string variant = "Prop";
  bool toy = false;
  fs::path out = ".";
};

io::KeyValueConfig user_config(const Globals& g) {
  return g.config.empty() ? io::KeyValueConfig{} : io::KeyValueConfig::load(g.config);
}

fs::path dataset_root(const Globals& g, const std::string& data) { return data.empty() ? g.out / "dataset" : fs::path(data); }

model::AVTNetConfig model_config(const Globals& g, const data::DatasetInfo& info) {
  model::AVTNetConfig c = g.toy ? model::AVTNetConfig::toy(info.n_classes) : model::AVTNetConfig::full(info.n_classes);
  io::KeyValueConfig kv = c.to_kv();
  kv.merge(user_config(g));
  c = model::AVTNetConfig::from_kv(kv);
  c.input = info.shape;
  c.n_classes = info.n_classes;
  c.validate();
  return c;
}

train::TrainConfig train_config(const Globals& g) {
  train::TrainConfig c = train::TrainConfig::from_kv(user_config(g));
  if (g.seed_given) c.seed = g.seed;
  c.toy_scale = c.toy_scale || g.toy;
  return c;
}

int synth(const Globals& g, const data::SyntheticOptions& base, double test_fraction, std::ostream& out) {
  data::SyntheticOptions options = base;
  options.seed = g.seed_given ? g.seed : base.seed;
  const data::SyntheticDataset dataset = data::generate_synthetic_dataset(options);
  const fs::path root = g.out / "dataset";
  data::save_synthetic(root, dataset, test_fraction);
  const data::PreparedDataset written = data::open_dataset(root);
  out << "wrote " << written.manifest.size() << " samples (" << written.manifest.subset(data::Split::Test).size()
      << " test) for " << written.manifest.n_classes << " subjects to " << root.string() << '\n';
  return kOk;
}

int prep(const Globals& g, const std::string& input, data::IngestOptions options, std::ostream& out) {
  options.seed = g.seed;
  options.shape = g.toy ? data::InputShape::toy() : data::InputShape::full();
  const fs::path root = g.out / "dataset";
  const data::DatasetManifest manifest = data::ingest_dataset(input, root, options);
  out << "wrote " << manifest.size() << " samples for " << manifest.n_classes << " subjects to " << root.string()
      << '\n';
  return kOk;
}

int train_cmd(const Globals& g, const std::string& data_dir, bool resume, std::ostream& out) {
  const eval::VariantConfig variant = eval::variant_by_name(g.variant);
  const fs::path root = dataset_root(g, data_dir);
  const data::DatasetInfo info = data::read_dataset_info(root / "dataset.cfg");
  const data::PreparedDataset dataset = data::open_dataset(root);
  const model::AVTNetConfig config = model_config(g, info);
  const train::TrainConfig tc = train_config(g);

  const fs::path run = run_directory(g.out, variant.name, tc.seed);
  fs::create_directories(run);
  io::KeyValueConfig settings = tc.to_kv();
  settings.merge(config.to_kv());
  settings.set("variant", variant.name);
  settings.set("dataset", fs::absolute(root).string());
  settings.save(run / "train.cfg");

  std::ofstream log(run / "train_log.jsonl", resume ? std::ios::app : std::ios::trunc);
  train::Hooks hooks;
  hooks.log = &log;
  hooks.checkpoint_dir = run / "checkpoints";
  hooks.resume = resume;

  eval::Pipeline pipeline(variant, config, tc.seed);
  const data::DatasetManifest train_split = dataset.manifest.subset(data::Split::Train);
  const train::TrainResult result = train::train_pipeline(pipeline, train_split, *dataset.loader, tc, hooks);
  pipeline.save(run / "model");
  if (!variant.end_to_end) {
    train::write_embedding_table(run / "embeddings_train.csv", result.train_table);
    const auto test_table =
        train::export_embeddings(pipeline, dataset.manifest.subset(data::Split::Test), *dataset.loader);
    train::write_embedding_table(run / "embeddings_test.csv", test_table);
  }
  out << "trained " << variant.name << " (seed " << tc.seed << "): final train accuracy "
      << result.phase2.final_accuracy() << "; run directory " << run.string() << '\n';
  return kOk;
}

int eval_cmd(const Globals& g, const std::string& data_dir, std::ostream& out) {
  const eval::VariantConfig variant = eval::variant_by_name(g.variant);
  const std::uint64_t seed = g.seed_given ? g.seed : train_config(g).seed;
  const fs::path run = run_directory(g.out, variant.name, seed);
  if (!fs::exists(run / "model" / "model.cfg"))
    throw IoError("no trained model in " + run.string() + "; run `train` first");
  fs::path root = dataset_root(g, data_dir);
  if (data_dir.empty() && fs::exists(run / "train.cfg")) {
    const auto settings = io::KeyValueConfig::load(run / "train.cfg");
    root = settings.get_string("dataset", root.string());
  }
  const data::PreparedDataset dataset = data::open_dataset(root);
  const eval::Pipeline pipeline = eval::Pipeline::load(run / "model");
  const eval::ConditionReport report =
      eval::evaluate_conditions(pipeline, dataset.manifest.subset(data::Split::Test), *dataset.loader);
  eval::emit_report({report}, run);
  out << eval::render_table({report});
  return kOk;
}

int report_cmd(const Globals& g, bool median, std::ostream& out) {
  const fs::path runs = g.out / "runs";
  if (!fs::is_directory(runs)) throw IoError("no runs under " + g.out.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs))
    if (fs::exists(entry.path() / "report.csv")) files.push_back(entry.path() / "report.csv");
  std::sort(files.begin(), files.end());
  std::vector<eval::ConditionReport> reports;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    for (auto& r : eval::parse_csv(text.str())) reports.push_back(std::move(r));
  }
  if (reports.empty()) throw IoError("no evaluated runs under " + runs.string() + "; run `eval` first");
  if (median) {
    std::map<std::string, std::vector<eval::ConditionReport>> by_variant;
    for (const auto& r : reports) by_variant[r.variant].push_back(r);
    reports.clear();
    for (const auto& [name, group] : by_variant) reports.push_back(eval::median_report(group));
  }
  eval::emit_report(reports, g.out);
  out << eval::render_table(reports);
  return kOk;
}

int verify_cmd(const Globals& g, std::ostream& out) {
  bool ok = true;
  for (const auto& r : verify::run_all(g.seed)) {
    out << verify::format(r) << '\n' << std::flush;
    ok = ok && r.passed;
  }
  out << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok ? kOk : kFailure;
}

}  // namespace

fs::path run_directory(const fs::path& out, const std::string& variant, std::uint64_t seed) {
  return out / "runs" / (variant + "-s" + std::to_string(seed));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal person recognition with missing-modality embeddings"};
  app.require_subcommand(1);
  // global flags may follow the subcommand
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value config file (model.* and train.* keys)");
  app.add_option("--seed", g.seed, "random seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--variant", g.variant, "model variant");
  app.add_flag("--toy", g.toy, "toy-scale network");
  app.add_option("--out", g.out, "output directory; all paths are relative to it");

  data::SyntheticOptions synth_options;
  double synth_test_fraction = 0.2;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic trimodal dataset");
  synth_cmd->add_option("--subjects", synth_options.n_subjects, "number of subjects");
  synth_cmd->add_option("--samples", synth_options.samples_per_subject, "fully-valid samples per subject");
  synth_cmd->add_option("--test-fraction", synth_test_fraction, "test share of each stratum");
  synth_cmd->add_option("--audio-noise", synth_options.audio_noise, "per-sample variation of the audio stream");
  synth_cmd->add_option("--visible-noise", synth_options.visible_noise, "per-sample variation of the visible stream");
  synth_cmd->add_option("--thermal-noise", synth_options.thermal_noise, "per-sample variation of the thermal stream");

  std::string prep_input;
  data::IngestOptions ingest;
  CLI::App* prep_cmd = app.add_subcommand("prep", "ingest real data, ablate and split");
  prep_cmd->add_option("--input", prep_input, "directory holding manifest.csv and .npy files")->required();
  prep_cmd->add_option("--test-fraction", ingest.test_fraction, "test share of each stratum");
  prep_cmd->add_option("--audio-rate", ingest.audio_sample_rate, "sample rate of waveform inputs");
  prep_cmd->add_flag("--resample", ingest.resample_audio, "linearly resample audio to 44 kHz");

  std::string data_dir;
  bool resume = false;
  CLI::App* train_sub = app.add_subcommand("train", "train a variant (both phases)");
  train_sub->add_option("--data", data_dir, "dataset directory (default <out>/dataset)");
  train_sub->add_flag("--resume", resume, "continue from the last phase-1 checkpoint");

  CLI::App* eval_sub = app.add_subcommand("eval", "per-condition accuracy of a trained run");
  eval_sub->add_option("--data", data_dir, "dataset directory (default: the one used for training)");

  bool median = false;
  CLI::App* report_sub = app.add_subcommand("report", "aggregate evaluated runs into one table");
  report_sub->add_flag("--median", median, "one row per variant: per-cell median over seeds");

  CLI::App* verify_sub = app.add_subcommand("verify", "run the oracle and gradient checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) return synth(g, synth_options, synth_test_fraction, out);
    if (*prep_cmd) return prep(g, prep_input, ingest, out);
    if (*train_sub) return train_cmd(g, data_dir, resume, out);
    if (*eval_sub) return eval_cmd(g, data_dir, out);
    if (*report_sub) return report_cmd(g, median, out);
    if (*verify_sub) return verify_cmd(g, out);
  } catch (const eval::UnknownVariant& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace avt::cli
