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
#include "avt/variants.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace avt::eval {

/// Table columns in display order.
enum class Condition { NoMissing = 0, MissVisible = 1, MissThermal = 2, MissAudio = 3 };
inline constexpr std::array<Condition, 4> kConditions{Condition::NoMissing, Condition::MissVisible,
                                                      Condition::MissThermal, Condition::MissAudio};

std::string_view condition_title(Condition c);
/// Stable machine-readable name (no_missing, miss_visible, ...).
std::string_view condition_key(Condition c);
/// Nothing for patterns with more than one missing modality.
std::optional<Condition> condition_of(const data::Validity& validity);

struct ConditionReport {
  std::string variant;
  std::uint64_t seed = 0;
  /// Empty for conditions without test samples.
  std::array<std::optional<double>, 4> accuracy;
  std::array<int, 4> counts{0, 0, 0, 0};
  /// Mean of the available cells.
  double avg = 0.0;
  std::vector<std::string> warnings;

  std::optional<double> cell(Condition c) const { return accuracy[static_cast<std::size_t>(c)]; }
};

/// Fills cells, counts and avg from per-sample predictions.
ConditionReport make_report(const std::string& variant, std::uint64_t seed,
                            const std::vector<data::Validity>& validity, const IntVec& labels,
                            const IntVec& predictions);

ConditionReport evaluate_conditions(const Pipeline& pipeline, const data::DatasetManifest& test,
                                    const data::SampleLoader& loader);

/// Per-cell median over reports of one variant (e.g. several seeds).
ConditionReport median_report(const std::vector<ConditionReport>& reports);

/// Plain-text tables: every report in the main table, plus a bimodal fusion
/// table when any of AV / AT / VT is present. Rows sorted by variant name.
std::string render_table(const std::vector<ConditionReport>& reports);
/// Machine-readable rows at full precision, same ordering as the table.
std::string render_csv(const std::vector<ConditionReport>& reports);
std::vector<ConditionReport> parse_csv(const std::string& text);

/// Writes report.txt and report.csv into `dir`.
void emit_report(const std::vector<ConditionReport>& reports, const std::filesystem::path& dir);

}  // namespace avt::eval
