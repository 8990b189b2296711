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
#include "avt/training.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace avt;
using train::TrainConfig;

namespace {

struct TinyData {
  data::PreparedDataset prepared;
  data::DatasetManifest train, test;
};

const TinyData& tiny_data() {
  static const TinyData d = [] {
    data::SyntheticOptions o;
    o.n_subjects = 4;
    o.samples_per_subject = 8;
    o.shape = test::tiny_config().input;
    TinyData t;
    t.prepared = data::prepare_synthetic(o, 0.25);
    t.train = t.prepared.manifest.subset(data::Split::Train);
    t.test = t.prepared.manifest.subset(data::Split::Test);
    return t;
  }();
  return d;
}

TrainConfig quick(int e1, int e2 = 2) {
  TrainConfig c;
  c.phase1_epochs = e1;
  c.phase2_epochs = e2;
  c.batch_size = 16;
  c.seed = 3;
  c.checkpoint_every = 0;
  return c;
}

std::uint64_t net_checksum(eval::Pipeline& p) { return checkpoint::checksum(p.net().parameters()); }
std::uint64_t recognizer_checksum(eval::Pipeline& p) { return checkpoint::checksum(p.recognizer().parameters()); }

std::vector<double> totals(const std::vector<train::EpochRecord>& h) {
  std::vector<double> out;
  for (const auto& r : h) out.push_back(r.loss.L_total);
  return out;
}

// Fails for one sample id, delegates otherwise.
class FlakyLoader final : public data::SampleLoader {
 public:
  FlakyLoader(const data::SampleLoader& inner, std::string bad) : inner_(inner), bad_(std::move(bad)) {}
  data::ModalitySample load(const data::ManifestEntry& e) const override {
    if (e.sample_id == bad_) throw IoError("cannot read " + e.sample_id);
    return inner_.load(e);
  }
  const data::InputShape& shape() const override { return inner_.shape(); }

 private:
  const data::SampleLoader& inner_;
  std::string bad_;
};

}  // namespace

TEST(MakeBatches, PartitionAndDeterminism) {
  IntVec labels(50);
  for (int i = 0; i < 50; ++i) labels(i) = i % 5;
  for (bool stratified : {true, false}) {
    const auto a = train::make_batches(labels, 16, stratified, 4, 1);
    EXPECT_EQ(a, train::make_batches(labels, 16, stratified, 4, 1));
    EXPECT_NE(a, train::make_batches(labels, 16, stratified, 4, 2));
    std::multiset<std::size_t> seen;
    for (const auto& b : a) {
      EXPECT_GT(b.size(), 1U);
      seen.insert(b.begin(), b.end());
    }
    EXPECT_EQ(seen.size(), 50U);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 50U);
  }
  IntVec odd(17);
  odd.setZero();
  const auto merged = train::make_batches(odd, 16, false, 4, 1);
  ASSERT_EQ(merged.size(), 1U);
  EXPECT_EQ(merged[0].size(), 17U);
}

TEST(MakeBatches, StratifiedBatchesHoldSeveralClassesWithPositives) {
  IntVec labels(64);
  for (int i = 0; i < 64; ++i) labels(i) = i % 8;
  for (const auto& b : train::make_batches(labels, 16, true, 4, 5)) {
    std::map<int, int> counts;
    for (auto i : b) ++counts[labels(static_cast<Eigen::Index>(i))];
    EXPECT_GE(counts.size(), 2U);
    for (const auto& [cls, n] : counts) EXPECT_GE(n, 2) << "class " << cls;
  }
}

TEST(TrainConfig, ValidationAndRoundTrip) {
  TrainConfig c = quick(3);
  c.toy_scale = true;
  const auto back = TrainConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.phase1_epochs, 3);
  EXPECT_EQ(back.batch_size, 16);
  EXPECT_TRUE(back.toy_scale);
  EXPECT_EQ(back.seed, 3U);
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  TrainConfig d;
  d.phase1_epochs = 0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(TrainEmbeddings, HistoryLengthLogAndReproducibility) {
  const auto& d = tiny_data();
  eval::Pipeline a(eval::variant_by_name("Prop"), test::tiny_config(), 4);
  eval::Pipeline b(eval::variant_by_name("Prop"), test::tiny_config(), 4);
  std::ostringstream log;
  train::Hooks hooks;
  hooks.log = &log;
  const auto ha = train::train_embeddings(a, d.train, *d.prepared.loader, quick(3), hooks);
  const auto hb = train::train_embeddings(b, d.train, *d.prepared.loader, quick(3));
  ASSERT_EQ(ha.size(), 3U);
  EXPECT_EQ(totals(ha), totals(hb));
  EXPECT_EQ(net_checksum(a), net_checksum(b));
  for (const auto& r : ha) {
    EXPECT_TRUE(r.finite);
    EXPECT_GT(r.steps, 0);
    EXPECT_NEAR(r.loss.L_total, r.loss.L_c + r.loss.L_t + r.loss.L_s + r.loss.L_j, 1e-12);
  }
  std::istringstream lines(log.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.front(), '{');
    EXPECT_NE(line.find("\"L_total\""), std::string::npos);
    ++n;
  }
  EXPECT_EQ(n, 3);
}

TEST(TrainEmbeddings, ZeroLearningRateLeavesWeightsUnchanged) {
  const auto& d = tiny_data();
  eval::Pipeline p(eval::variant_by_name("Prop"), test::tiny_config(), 5);
  const auto before = net_checksum(p);
  TrainConfig c = quick(1);
  c.learning_rate = 0.0;
  train::train_embeddings(p, d.train, *d.prepared.loader, c);
  EXPECT_EQ(net_checksum(p), before);
}

TEST(TrainEmbeddings, LossDecreases) {
  const auto& d = tiny_data();
  eval::Pipeline p(eval::variant_by_name("Prop"), test::tiny_config(), 6);
  const auto h = train::train_embeddings(p, d.train, *d.prepared.loader, quick(8));
  EXPECT_LT(h.back().loss.L_total, h.front().loss.L_total);
}

TEST(TrainEmbeddings, ResumeReproducesUninterruptedRun) {
  const auto& d = tiny_data();
  TrainConfig c = quick(4);
  c.checkpoint_every = 1;
  test::TempDir dir("resume");

  eval::Pipeline straight(eval::variant_by_name("Prop"), test::tiny_config(), 7);
  const auto full = train::train_embeddings(straight, d.train, *d.prepared.loader, c);

  eval::Pipeline interrupted(eval::variant_by_name("Prop"), test::tiny_config(), 7);
  train::Hooks first;
  first.checkpoint_dir = dir.path();
  first.stop_after = 2;
  EXPECT_EQ(train::train_embeddings(interrupted, d.train, *d.prepared.loader, c, first).size(), 2U);
  ASSERT_TRUE(std::filesystem::exists(dir / "phase1.ckpt"));

  eval::Pipeline resumed(eval::variant_by_name("Prop"), test::tiny_config(), 7);
  train::Hooks second;
  second.checkpoint_dir = dir.path();
  second.resume = true;
  const auto rest = train::train_embeddings(resumed, d.train, *d.prepared.loader, c, second);
  ASSERT_EQ(rest.size(), 4U);
  EXPECT_EQ(totals(rest), totals(full));
  EXPECT_EQ(net_checksum(resumed), net_checksum(straight));
}

TEST(ExportEmbeddings, RowsNormsDeterminismAndErrors) {
  const auto& d = tiny_data();
  eval::Pipeline p(eval::variant_by_name("Prop"), test::tiny_config(), 8);
  const auto table = train::export_embeddings(p, d.test, *d.prepared.loader);
  ASSERT_EQ(table.rows.size(), d.test.size());
  for (const auto& r : table.rows) {
    EXPECT_TRUE(r.error.empty());
    for (const Vec* v : {&r.bundle.audio, &r.bundle.visible, &r.bundle.thermal, &r.bundle.joint})
      EXPECT_NEAR(v->norm(), 1.0, 1e-9);
  }
  const auto again = train::export_embeddings(p, d.test, *d.prepared.loader);
  EXPECT_EQ(again.rows[3].bundle.joint, table.rows[3].bundle.joint);

  const FlakyLoader flaky(*d.prepared.loader, d.test.entries[1].sample_id);
  const auto partial = train::export_embeddings(p, d.test, flaky);
  ASSERT_EQ(partial.rows.size(), d.test.size());
  EXPECT_FALSE(partial.rows[1].error.empty());
  EXPECT_TRUE(partial.rows[0].error.empty());
  EXPECT_EQ(partial.rows[0].bundle.joint, table.rows[0].bundle.joint);

  test::TempDir dir("table");
  train::write_embedding_table(dir / "t.csv", partial);
  const auto back = train::read_embedding_table(dir / "t.csv");
  ASSERT_EQ(back.rows.size(), partial.rows.size());
  EXPECT_EQ(back.rows[0].bundle.visible, partial.rows[0].bundle.visible);
  EXPECT_EQ(back.rows[0].validity, partial.rows[0].validity);
  EXPECT_EQ(back.rows[1].error, partial.rows[1].error);
  EXPECT_EQ(back.rows[2].sample_id, partial.rows[2].sample_id);
}

TEST(TrainRecognizer, FitsSeparableEmbeddingsWithoutTouchingTheNetwork) {
  const auto cfg = test::tiny_config();
  eval::Pipeline p(eval::variant_by_name("Prop"), cfg, 9);
  Rng rng(9);
  std::normal_distribution<double> noise(0.0, 0.05);
  train::EmbeddingTable table;
  for (int i = 0; i < 64; ++i) {
    train::EmbeddingRow r;
    r.sample_id = "s" + std::to_string(i);
    r.subject_id = i % 4;
    Vec centre = Vec::Zero(cfg.embed_dim);
    centre(r.subject_id) = 1.0;
    for (Vec* v : {&r.bundle.audio, &r.bundle.visible, &r.bundle.thermal, &r.bundle.joint}) {
      *v = centre;
      for (Eigen::Index k = 0; k < v->size(); ++k) (*v)(k) += noise(rng);
    }
    table.rows.push_back(r);
  }
  const auto net_before = net_checksum(p);
  const auto rec_before = recognizer_checksum(p);
  const auto h = train::train_recognizer(p, table, 4, quick(1, 15));
  EXPECT_EQ(h.loss.size(), 15U);
  EXPECT_GE(h.final_accuracy(), 0.99);
  EXPECT_EQ(net_checksum(p), net_before);
  EXPECT_NE(recognizer_checksum(p), rec_before);

  table.rows.erase(std::remove_if(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.subject_id == 3; }),
                   table.rows.end());
  EXPECT_THROW(train::train_recognizer(p, table, 4, quick(1, 1)), ConfigError);
}

TEST(TrainPipeline, EndToEndHistorySpansBothPhases) {
  const auto& d = tiny_data();
  eval::Pipeline p(eval::variant_by_name("E2E"), test::tiny_config(), 10);
  const auto r = train::train_pipeline(p, d.train, *d.prepared.loader, quick(2, 3));
  EXPECT_TRUE(r.phase1.empty());
  EXPECT_EQ(r.phase2.loss.size(), 5U);
}

TEST(TrainPipeline, PhaseTwoLeavesEmbeddingsFrozen) {
  const auto& d = tiny_data();
  eval::Pipeline p(eval::variant_by_name("Prop"), test::tiny_config(), 11);
  train::train_embeddings(p, d.train, *d.prepared.loader, quick(2));
  const auto frozen = net_checksum(p);
  const auto table = train::export_embeddings(p, d.train, *d.prepared.loader);
  train::train_recognizer(p, table, d.train.n_classes, quick(2, 3));
  EXPECT_EQ(net_checksum(p), frozen);
  const auto r = train::train_pipeline(p, d.train, *d.prepared.loader, quick(2, 2));
  EXPECT_EQ(r.phase1.size(), 2U);
  EXPECT_EQ(r.train_table.rows.size(), d.train.size());
}
