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
#include "testing.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace avt;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "avt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Cli, SynthTrainEvalReport) {
  test::TempDir dir("cli");
  const std::string out = dir.path().string();
  {
    std::ofstream cfg(dir / "quick.cfg");
    cfg << "train.phase1_epochs = 1\ntrain.phase2_epochs = 1\nmodel.audio_filters = 4,4,8\nmodel.feature_dim = 8\n"
           "model.image_filters = 4,4\nmodel.embed_dim = 16\nmodel.recognizer_hidden = 16,8\n";
  }
  const std::string cfg = (dir / "quick.cfg").string();
  auto r = run({"synth", "--seed", "7", "--subjects", "3", "--samples", "4", "--toy", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "dataset" / "manifest.csv"));

  r = run({"train", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto run_dir = cli::run_directory(dir.path(), "Prop", 1);
  EXPECT_TRUE(std::filesystem::exists(run_dir / "model"));
  EXPECT_TRUE(std::filesystem::exists(run_dir / "train_log.jsonl"));

  r = run({"eval", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(std::filesystem::exists(run_dir / "report.txt"));
  const std::string first = slurp(run_dir / "report.txt");
  EXPECT_NE(first.find("Miss. Audio"), std::string::npos);
  r = run({"eval", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(run_dir / "report.txt"), first);

  r = run({"report", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "report.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
}

TEST(Cli, UnknownVariantIsAUsageError) {
  test::TempDir dir("cli_bad");
  const auto r = run({"train", "--variant", "nosuch", "--out", dir.path().string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("Prop-III"), std::string::npos);
}

TEST(Cli, BadArgumentsAndFailures) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  test::TempDir dir("cli_fail");
  EXPECT_EQ(run({"eval", "--out", dir.path().string()}).code, cli::kFailure);
}

TEST(Cli, VerifyPasses) {
  const auto r = run({"verify"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}
