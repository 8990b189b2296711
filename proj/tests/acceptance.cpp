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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "avt/evaluation.hpp"
#include "avt/training.hpp"
#include "avt/verify/suite.hpp"
#include "cli.hpp"
#include "testing.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace avt;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

struct Criterion {
  int id;
  std::string name;
  bool passed = false;
  std::string detail;
};

bool report(const Criterion& c) {
  std::cout << (c.passed ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << c.detail
            << std::endl;
  return c.passed;
}

Criterion from_check(int id, const verify::CheckResult& r, double budget_seconds = 0.0) {
  Criterion c{id, r.name, false, {}};
  c.passed = r.passed && (budget_seconds <= 0.0 || r.seconds < budget_seconds);
  std::ostringstream d;
  d << r.detail << "; " << r.seconds << " s";
  if (budget_seconds > 0.0) d << " (budget " << budget_seconds << " s)";
  c.detail = d.str();
  return c;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Synthetic toy run: train on the train split, evaluate per condition.
eval::ConditionReport synthetic_run(const std::string& variant, std::uint64_t seed,
                                    const data::PreparedDataset& ds) {
  const auto train_set = ds.manifest.subset(data::Split::Train);
  const auto test_set = ds.manifest.subset(data::Split::Test);
  eval::Pipeline pipeline(eval::variant_by_name(variant), model::AVTNetConfig::toy(ds.manifest.n_classes), seed);
  train::TrainConfig config;
  config.phase1_epochs = 15;
  config.phase2_epochs = 15;
  config.seed = seed;
  config.toy_scale = true;
  train::train_pipeline(pipeline, train_set, *ds.loader, config);
  return eval::evaluate_conditions(pipeline, test_set, *ds.loader);
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

Criterion smoke_experiment() {
  Criterion c{5, "toy end-to-end smoke experiment", false, {}};
  const auto t0 = Clock::now();
  const auto ds = data::prepare_synthetic(data::SyntheticOptions{}, 0.2);
  std::array<std::vector<double>, 4> cells;
  for (auto seed : kSeeds) {
    const auto r = synthetic_run("Prop", seed, ds);
    for (std::size_t k = 0; k < 4; ++k) cells[k].push_back(r.accuracy[k].value_or(0.0));
  }
  const double seconds = since(t0);
  std::ostringstream d;
  d << ds.manifest.size() << " samples; Prop median accuracy (%)";
  bool ok = seconds <= 600.0;
  for (auto cond : eval::kConditions) {
    const auto k = static_cast<std::size_t>(cond);
    const double m = median3(cells[k]);
    ok = ok && m >= (cond == eval::Condition::NoMissing ? 0.90 : 0.80);
    d << " " << eval::condition_title(cond) << " " << pct(m);
  }
  d << "; " << static_cast<int>(seconds) << " s (budget 600 s)";
  c.passed = ok;
  c.detail = d.str();
  return c;
}

Criterion comparative_structure() {
  Criterion c{6, "Prop vs E2E under skewed modality informativeness", false, {}};
  // Audio keeps the default per-sample variation; both cameras are four times noisier.
  data::SyntheticOptions skewed;
  skewed.audio_noise = 1.0;
  skewed.visible_noise = 4.0;
  skewed.thermal_noise = 4.0;
  const auto ds = data::prepare_synthetic(skewed, 0.2);
  std::map<std::string, std::vector<double>> avg;
  for (const std::string variant : {"Prop", "E2E"})
    for (auto seed : kSeeds) avg[variant].push_back(synthetic_run(variant, seed, ds).avg);
  const double prop = median3(avg["Prop"]), e2e = median3(avg["E2E"]);
  c.passed = prop >= e2e;
  std::ostringstream d;
  d << "noise audio/visible/thermal 1/4/4; median Avg (%) Prop " << pct(prop) << " vs E2E " << pct(e2e) << " (seeds";
  for (std::size_t i = 0; i < kSeeds.size(); ++i) d << " " << pct(avg["Prop"][i]) << "/" << pct(avg["E2E"][i]);
  d << ")";
  c.detail = d.str();
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "avt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

Criterion report_fidelity() {
  Criterion c{7, "report fidelity", false, {}};
  test::TempDir dir("acceptance_report");
  const std::string out = dir.path().string();
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "train.phase1_epochs = 2\ntrain.phase2_epochs = 3\n";
  }
  const std::string cfg = (dir / "run.cfg").string();
  std::string err;
  for (const auto& step : std::vector<std::vector<std::string>>{
           {"synth", "--seed", "7", "--subjects", "4", "--samples", "8", "--toy", "--out", out},
           {"train", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out},
           {"eval", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out},
           {"report", "--out", out}}) {
    if (cli(step, &err) != 0) {
      c.detail = step.front() + " failed: " + err;
      return c;
    }
  }
  const auto run_dir = cli::run_directory(dir.path(), "Prop", 1);
  const std::string eval_txt = slurp(run_dir / "report.txt"), eval_csv = slurp(run_dir / "report.csv");
  const std::string report_txt = slurp(dir / "report.txt"), report_csv = slurp(dir / "report.csv");
  cli({"eval", "--variant", "Prop", "--toy", "--seed", "1", "--config", cfg, "--out", out});
  cli({"report", "--out", out});
  const bool identical = slurp(run_dir / "report.txt") == eval_txt && slurp(run_dir / "report.csv") == eval_csv &&
                         slurp(dir / "report.txt") == report_txt && slurp(dir / "report.csv") == report_csv;

  // Header row: the Algorithm column followed by exactly the five accuracy columns.
  std::vector<std::string> columns;
  std::istringstream lines(report_txt);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("Algorithm", 0) != 0) continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, '|')) {
      cell.erase(0, cell.find_first_not_of(' '));
      cell.erase(cell.find_last_not_of(' ') + 1);
      columns.push_back(cell);
    }
    break;
  }
  const std::vector<std::string> expected{"Algorithm", "No-Missing", "Miss. Visible", "Miss. Thermal", "Miss. Audio",
                                          "Avg"};
  double worst = 0.0;
  const auto rows = eval::parse_csv(report_csv);
  for (const auto& r : rows) {
    double sum = 0.0;
    for (const auto& a : r.accuracy) sum += a.value_or(0.0);
    worst = std::max(worst, std::abs(r.avg - sum / 4.0));
  }
  c.passed = columns == expected && !rows.empty() && worst <= 1e-9 && identical;
  std::ostringstream d;
  d << "columns " << (columns == expected ? "match" : "differ") << "; max |Avg - row mean| = " << worst
    << "; repeated eval/report " << (identical ? "byte-identical" : "differ");
  c.detail = d.str();
  return c;
}

Criterion pipeline_counts() {
  Criterion c{8, "pipeline counts", false, {}};
  const auto synthetic = data::generate_synthetic_dataset(data::SyntheticOptions{});
  const auto ablated = data::ablate_manifest(synthetic.manifest);
  bool zeros = true;
  std::size_t copies = 0;
  for (const auto& s : synthetic.samples)
    for (const auto& a : data::make_ablations(s)) {
      ++copies;
      for (auto m : data::kModalities)
        if (!a.validity[m]) zeros = zeros && (a.tensor(m).data.array() == 0.0).all();
    }
  const auto split_a = data::split_dataset(ablated, 0.2, 11), split_b = data::split_dataset(ablated, 0.2, 11);
  bool same = split_a.entries.size() == split_b.entries.size();
  for (std::size_t i = 0; same && i < split_a.entries.size(); ++i)
    same = split_a.entries[i].sample_id == split_b.entries[i].sample_id && split_a.entries[i].split == split_b.entries[i].split;
  const bool quadruple = ablated.size() == 4 * synthetic.manifest.size() && copies == 4 * synthetic.samples.size();
  c.passed = quadruple && zeros && same;
  std::ostringstream d;
  d << synthetic.manifest.size() << " fully-valid -> " << ablated.size() << " after ablation; missing tensors "
    << (zeros ? "exactly zero" : "not zero") << "; split " << (same ? "seed-deterministic" : "not deterministic");
  c.detail = d.str();
  return c;
}

}  // namespace

int main() {
  bool all = true;
  const auto guarded = [&](int id, const std::string& name, const std::function<Criterion()>& f) {
    Criterion c;
    try {
      c = f();
    } catch (const std::exception& e) {
      c = Criterion{id, name, false, std::string("exception: ") + e.what()};
    }
    all = report(c) && all;
  };
  guarded(1, "mining oracle equivalence", [] { return from_check(1, verify::check_mining_oracle(200), 30.0); });
  guarded(2, "mask definitions", [] { return from_check(2, verify::check_mask_definitions(1000)); });
  guarded(3, "loss gradients", [] { return from_check(3, verify::check_loss_gradients(50), 60.0); });
  guarded(4, "model invariants", [] { return from_check(4, verify::check_model_invariants()); });
  guarded(5, "toy end-to-end smoke experiment", smoke_experiment);
  guarded(6, "Prop vs E2E under skewed modality informativeness", comparative_structure);
  guarded(7, "report fidelity", report_fidelity);
  guarded(8, "pipeline counts", pipeline_counts);
  return all ? 0 : 1;
}
