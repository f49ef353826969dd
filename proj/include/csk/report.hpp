// Copyright 2026-present the csk project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csk/attribution.hpp"
#include "csk/stability.hpp"

namespace csk {

/// First line of every CSV the CLI writes.
std::string seed_header(std::uint64_t seed, const std::string& command);

/// Reads the seed back from a header line; nullopt when absent.
std::optional<std::uint64_t> parse_seed_header(const std::string& line);

/// Fixed-point metric formatting used in CSV cells.
std::string format_metric(double v);
/// Shortest exact round-trip formatting for raw values.
std::string format_exact(double v);

// Stability rows.
std::string stability_csv(std::span<const StabilityRow> rows, std::uint64_t seed, const std::string& command);
std::vector<StabilityRow> parse_stability_csv(const std::string& text);

/// Mean over concepts of one (layer, mode, sample_count) cell. s is the
/// product of the two means, so the table's S column always equals cos x f1.
struct StabilityCell {
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
    std::size_t sample_count = 0;
    double cos = 0.0;
    double f1 = 0.0;
    double s = 0.0;
    std::size_t concepts = 0;
};

std::vector<StabilityCell> summarize_stability(std::span<const StabilityRow> rows);

/// Text table with rows cos/f1/S per mode and one column per layer, at the
/// given sample count (the largest present when nullopt).
std::string format_stability_table(std::span<const StabilityCell> cells,
                                   std::optional<std::size_t> sample_count = std::nullopt);

/// Per-count means (Figs.-style line data).
std::string sweep_csv(std::span<const StabilityCell> cells, std::uint64_t seed, const std::string& command);
/// gnuplot data: one block per (mode, layer), separated by two blank lines.
std::string sweep_dat(std::span<const StabilityCell> cells, std::uint64_t seed, const std::string& command);

std::string sweep_errors_csv(std::span<const SweepCellError> errors, std::uint64_t seed,
                             const std::string& command);

// Attribution records.
std::string records_csv(std::span<const AttributionRecord> records, std::uint64_t seed, const std::string& command);
std::vector<AttributionRecord> parse_records_csv(const std::string& text);

std::string grad_summary_csv(std::span<const GradStabilitySummary> rows, std::uint64_t seed,
                             const std::string& command);

/// Rows TP/TN/FP/FN/Acc/"CAD, %" (one decimal), one column per layer; one
/// table per mode present in `rows`.
std::string format_grad_table(std::span<const GradStabilitySummary> rows);

/// Groups records by (layer, mode) and summarizes each group.
std::vector<GradStabilitySummary> summarize_all(std::span<const AttributionRecord> records);

/// Per-prediction CAD; "undefined" marks a zero denominator.
std::string cad_csv(std::span<const AttributionRecord> records, std::uint64_t seed, const std::string& command);

/// Writes text to a file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace csk
