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

#include "avt/evaluation.hpp"

#include "avt/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace avt::eval {
namespace {

const std::vector<std::string> kBimodal{"AV", "AT", "VT"};

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ConditionReport> sorted(std::vector<ConditionReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const ConditionReport& a, const ConditionReport& b) {
    return a.variant != b.variant ? a.variant < b.variant : a.seed < b.seed;
  });
  return reports;
}

std::string row_label(const ConditionReport& r) {
  std::string label = r.variant;
  try {
    label = variant_by_name(r.variant).label();
  } catch (const UnknownVariant&) {
  }
  return label;
}

void finish(ConditionReport& r) {
  double sum = 0.0;
  int n = 0;
  for (Condition c : kConditions) {
    const auto& cell = r.accuracy[static_cast<std::size_t>(c)];
    if (cell) {
      sum += *cell;
      ++n;
    } else {
      r.warnings.push_back(std::string(condition_key(c)) + " has no test samples; excluded from avg");
    }
  }
  r.avg = n > 0 ? sum / n : 0.0;
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string_view condition_title(Condition c) {
  switch (c) {
    case Condition::NoMissing: return "No-Missing";
    case Condition::MissVisible: return "Miss. Visible";
    case Condition::MissThermal: return "Miss. Thermal";
    case Condition::MissAudio: return "Miss. Audio";
  }
  return "?";
}

std::string_view condition_key(Condition c) {
  switch (c) {
    case Condition::NoMissing: return "no_missing";
    case Condition::MissVisible: return "miss_visible";
    case Condition::MissThermal: return "miss_thermal";
    case Condition::MissAudio: return "miss_audio";
  }
  return "?";
}

std::optional<Condition> condition_of(const data::Validity& v) {
  using data::Modality;
  if (v.all_valid()) return Condition::NoMissing;
  if (v.missing_count() != 1) return std::nullopt;
  if (!v[Modality::Visible]) return Condition::MissVisible;
  if (!v[Modality::Thermal]) return Condition::MissThermal;
  return Condition::MissAudio;
}

ConditionReport make_report(const std::string& variant, std::uint64_t seed,
                            const std::vector<data::Validity>& validity, const IntVec& labels,
                            const IntVec& predictions) {
  if (labels.size() != predictions.size() || validity.size() != static_cast<std::size_t>(labels.size()))
    throw InputError("make_report: validity, labels and predictions differ in length");
  ConditionReport r;
  r.variant = variant;
  r.seed = seed;
  std::array<int, 4> correct{0, 0, 0, 0};
  int other = 0;
  for (std::size_t i = 0; i < validity.size(); ++i) {
    const auto c = condition_of(validity[i]);
    if (!c) {
      ++other;
      continue;
    }
    const auto k = static_cast<std::size_t>(*c);
    ++r.counts[k];
    if (labels(static_cast<Eigen::Index>(i)) == predictions(static_cast<Eigen::Index>(i))) ++correct[k];
  }
  for (std::size_t k = 0; k < 4; ++k)
    if (r.counts[k] > 0) r.accuracy[k] = static_cast<double>(correct[k]) / r.counts[k];
  if (other > 0) r.warnings.push_back(std::to_string(other) + " samples with several missing modalities not tabulated");
  finish(r);
  return r;
}

ConditionReport evaluate_conditions(const Pipeline& pipeline, const data::DatasetManifest& test,
                                    const data::SampleLoader& loader) {
  std::vector<data::Validity> validity;
  IntVec labels(static_cast<Eigen::Index>(test.size()));
  IntVec predictions(labels.size());
  constexpr std::size_t kChunk = 32;
  for (std::size_t at = 0; at < test.size(); at += kChunk) {
    std::vector<data::ModalitySample> samples;
    for (std::size_t i = at; i < std::min(test.size(), at + kChunk); ++i) samples.push_back(loader.load(test.entries[i]));
    std::vector<const data::ModalitySample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    const IntVec pred = pipeline.predict(ptrs);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(at + j);
      labels(i) = samples[j].subject_id;
      predictions(i) = pred(static_cast<Eigen::Index>(j));
      validity.push_back(samples[j].validity);
    }
  }
  return make_report(pipeline.variant().name, pipeline.seed(), validity, labels, predictions);
}

ConditionReport median_report(const std::vector<ConditionReport>& reports) {
  if (reports.empty()) throw InputError("median_report: no reports");
  ConditionReport out;
  out.variant = reports.front().variant;
  out.seed = reports.front().seed;
  out.counts = reports.front().counts;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> v;
    for (const auto& r : reports) {
      if (r.variant != out.variant) throw InputError("median_report: mixed variants");
      if (r.accuracy[k]) v.push_back(*r.accuracy[k]);
    }
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    out.accuracy[k] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  finish(out);
  return out;
}

std::string render_table(const std::vector<ConditionReport>& reports) {
  const auto rows = sorted(reports);
  std::ostringstream out;
  std::size_t label_width = std::string("Algorithm").size();
  const bool multi_seed = [&] {
    std::set<std::string> names;
    for (const auto& r : rows)
      if (!names.insert(r.variant).second) return true;
    return false;
  }();
  auto label_of = [&](const ConditionReport& r) {
    return multi_seed ? row_label(r) + " s" + std::to_string(r.seed) : row_label(r);
  };
  for (const auto& r : rows) label_width = std::max(label_width, label_of(r).size());

  out << "Recognition accuracy (%)\n";
  out << pad("Algorithm", label_width, true);
  for (Condition c : kConditions) out << " | " << pad(std::string(condition_title(c)), 13, false);
  out << " | " << pad("Avg", 6, false) << '\n';
  out << std::string(label_width, '-');
  for (int i = 0; i < 4; ++i) out << "-+-" << std::string(13, '-');
  out << "-+-" << std::string(6, '-') << '\n';
  for (const auto& r : rows) {
    out << pad(label_of(r), label_width, true);
    for (Condition c : kConditions) out << " | " << pad(percent(r.cell(c)), 13, false);
    out << " | " << pad(percent(r.avg), 6, false) << '\n';
  }

  std::vector<const ConditionReport*> fusion;
  bool any_bimodal = false;
  for (const auto& r : rows) {
    const bool bimodal = std::find(kBimodal.begin(), kBimodal.end(), r.variant) != kBimodal.end();
    any_bimodal = any_bimodal || bimodal;
    if (bimodal || r.variant == "Prop") fusion.push_back(&r);
  }
  if (any_bimodal) {
    std::vector<std::string> names;
    for (const auto* r : fusion) names.push_back(label_of(*r));
    out << "\nSensor fusion, average accuracy (%)\n";
    out << "Fusion ";
    for (const auto& n : names) out << " | " << pad(n, std::max<std::size_t>(n.size(), 6), false);
    out << '\n';
    out << "Avg    ";
    for (std::size_t i = 0; i < fusion.size(); ++i)
      out << " | " << pad(percent(fusion[i]->avg), std::max<std::size_t>(names[i].size(), 6), false);
    out << '\n';
  }

  std::vector<std::string> warnings;
  for (const auto& r : rows)
    for (const auto& w : r.warnings) warnings.push_back(label_of(r) + ": " + w);
  out << "\nAvg is the mean of the available condition columns. All variants share one training schedule.\n";
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string render_csv(const std::vector<ConditionReport>& reports) {
  std::ostringstream out;
  out << "variant,seed";
  for (Condition c : kConditions) out << ',' << condition_key(c);
  out << ",avg";
  for (Condition c : kConditions) out << ",n_" << condition_key(c);
  out << '\n';
  for (const auto& r : sorted(reports)) {
    out << r.variant << ',' << r.seed;
    for (Condition c : kConditions) {
      out << ',';
      if (const auto v = r.cell(c)) out << full(*v);
    }
    out << ',' << full(r.avg);
    for (int n : r.counts) out << ',' << n;
    out << '\n';
  }
  return out.str();
}

std::vector<ConditionReport> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("variant,seed", 0) != 0) throw IoError("not a condition report CSV");
  std::vector<ConditionReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw IoError("condition report row has " + std::to_string(cells.size()) + " cells");
    ConditionReport r;
    r.variant = cells[0];
    r.seed = std::stoull(cells[1]);
    for (std::size_t k = 0; k < 4; ++k) {
      if (!cells[2 + k].empty()) r.accuracy[k] = std::stod(cells[2 + k]);
      r.counts[k] = std::stoi(cells[7 + k]);
    }
    finish(r);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_report(const std::vector<ConditionReport>& reports, const std::filesystem::path& dir) {
  if (reports.empty()) throw InputError("emit_report: no reports");
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : {std::pair{"report.txt", render_table(reports)}, std::pair{"report.csv", render_csv(reports)}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << text;
  }
}

}  // namespace avt::eval
