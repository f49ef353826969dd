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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csk/cav.hpp"

namespace csk {

/// Retrieval stability of one concept at one layer and dimensionality.
struct StabilityRow {
    std::string concept_id;
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
    std::size_t sample_count = 0;  // positive training samples per run
    double cos = 0.0;              // consistency, mean pairwise cosine
    double f1 = 0.0;               // separability, mean validation F1
    double s = 0.0;                // f1 * cos
};

struct SweepConfig {
    std::vector<std::size_t> layers;
    std::vector<CavMode> modes{CavMode::OneD, CavMode::TwoD, CavMode::ThreeD};
    std::vector<std::size_t> sample_counts{20, 40, 60, 80};

    void validate() const;
};

struct SweepCellError {
    std::string concept_id;  // "*" when the whole layer is missing
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
    std::size_t sample_count = 0;
    std::string message;
};

struct SweepResult {
    std::vector<StabilityRow> rows;  // sorted by concept, layer, mode, count
    std::vector<SweepCellError> errors;
    std::size_t cells = 0;
};

/// Cosine of two weight vectors, accumulated in f64. Throws
/// UndefinedCosineError when either vector has zero norm.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Mean pairwise cosine over all i > j. Requires at least two CAVs of the
/// same concept, layer and mode.
double consistency(std::span<const Cav> cavs);

/// Mean over runs of each CAV's F1 on its own validation split,
/// concept-vs-other.
double separability(std::span<const Cav> cavs, const ConceptDataset& ds);

double stability_score(double cos, double f1);

/// Consistency, separability and S for one trained ensemble.
StabilityRow evaluate_ensemble(std::span<const Cav> cavs, const ConceptDataset& ds, std::size_t sample_count);

/// Trains one ensemble per (concept, layer, mode, sample count) cell and
/// scores it. Cells run on `jobs` threads; failed cells are reported in
/// `errors` and the sweep continues.
SweepResult run_sweep(const std::map<std::size_t, ConceptDataset>& layers, const SweepConfig& cfg,
                      const TrainConfig& tcfg, std::size_t jobs = 1);

}  // namespace csk
