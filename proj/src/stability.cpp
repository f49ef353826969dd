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

#include "csk/stability.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "csk/error.hpp"
#include "csk/parallel.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

void
SweepConfig::validate() const {
    if (layers.empty()) throw ConfigError("sweep: no layers selected");
    if (modes.empty()) throw ConfigError("sweep: no CAV modes selected");
    if (sample_counts.empty()) throw ConfigError("sweep: no sample counts");
    for (std::size_t c : sample_counts) {
        if (c < 2) throw ConfigError("sweep: sample counts must be at least 2");
    }
}

double
cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine of vectors with lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    }
    const auto& k = simd::active();
    const double ab = k.dot_f32(a.data(), b.data(), a.size());
    const double aa = k.dot_f32(a.data(), a.data(), a.size());
    const double bb = k.dot_f32(b.data(), b.data(), b.size());
    if (!(aa > 0.0) || !(bb > 0.0)) {
        throw UndefinedCosineError("cosine similarity is undefined for a zero-norm CAV");
    }
    return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double
consistency(std::span<const Cav> cavs) {
    if (cavs.size() < 2) {
        throw DataError("consistency needs at least two CAVs, got " + std::to_string(cavs.size()));
    }
    for (const Cav& c : cavs) {
        if (c.concept_id != cavs[0].concept_id || c.layer_id != cavs[0].layer_id || c.mode != cavs[0].mode) {
            throw DataError("consistency: CAVs differ in concept, layer or mode");
        }
    }
    const std::size_t n = cavs.size();
    double sum = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            sum += cosine_similarity(cavs[i].weights, cavs[j].weights);
        }
    }
    return 2.0 * sum / static_cast<double>(n * (n - 1));
}

double
separability(std::span<const Cav> cavs, const ConceptDataset& ds) {
    if (cavs.empty()) {
        throw DataError("separability needs at least one CAV");
    }
    double sum = 0.0;
    for (const Cav& c : cavs) {
        if (c.split.val_pos.empty()) {
            throw DataError("separability: CAV for '" + c.concept_id + "' (seed " + std::to_string(c.run_seed) +
                            ") has an empty validation split");
        }
        sum += evaluate_f1(c, ds, c.split.val_pos, c.split.val_neg);
    }
    return sum / static_cast<double>(cavs.size());
}

double
stability_score(double cos, double f1) {
    return f1 * cos;
}

StabilityRow
evaluate_ensemble(std::span<const Cav> cavs, const ConceptDataset& ds, std::size_t sample_count) {
    StabilityRow row;
    row.concept_id = cavs.front().concept_id;
    row.layer_id = cavs.front().layer_id;
    row.mode = cavs.front().mode;
    row.sample_count = sample_count;
    row.cos = consistency(cavs);
    row.f1 = separability(cavs, ds);
    row.s = stability_score(row.cos, row.f1);
    return row;
}

namespace {

struct Cell {
    std::string concept_id;
    std::size_t layer_id;
    CavMode mode;
    std::size_t sample_count;
    const ConceptDataset* ds;  // null when the layer is missing
};

}  // namespace

SweepResult
run_sweep(const std::map<std::size_t, ConceptDataset>& layers, const SweepConfig& cfg, const TrainConfig& tcfg,
          std::size_t jobs) {
    cfg.validate();
    tcfg.validate();

    std::vector<Cell> cells;
    for (std::size_t layer : cfg.layers) {
        auto it = layers.find(layer);
        const ConceptDataset* ds = it == layers.end() ? nullptr : &it->second;
        const std::vector<std::string> concepts = ds ? ds->concept_ids() : std::vector<std::string>{"*"};
        for (const auto& concept_id : concepts) {
            for (CavMode mode : cfg.modes) {
                for (std::size_t count : cfg.sample_counts) {
                    cells.push_back({concept_id, layer, mode, count, ds});
                }
            }
        }
    }

    std::vector<std::optional<StabilityRow>> rows(cells.size());
    std::vector<std::string> failures(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell& cell = cells[i];
        if (!cell.ds) {
            failures[i] = "missing activations for layer " + std::to_string(cell.layer_id);
            return;
        }
        try {
            TrainConfig run_cfg = tcfg;
            run_cfg.train_samples = cell.sample_count;
            auto cavs = train_ensemble(*cell.ds, cell.concept_id, cell.mode, run_cfg);
            rows[i] = evaluate_ensemble(cavs, *cell.ds, cell.sample_count);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    SweepResult result;
    result.cells = cells.size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (rows[i]) {
            result.rows.push_back(std::move(*rows[i]));
        } else {
            const Cell& c = cells[i];
            result.errors.push_back({c.concept_id, c.layer_id, c.mode, c.sample_count, failures[i]});
        }
    }
    auto key = [](const auto& r) { return std::tie(r.concept_id, r.layer_id, r.mode, r.sample_count); };
    std::sort(result.rows.begin(), result.rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::sort(result.errors.begin(), result.errors.end(),
              [&](const auto& a, const auto& b) { return key(a) < key(b); });
    return result;
}

}  // namespace csk
