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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csk/cav.hpp"
#include "csk/refnet.hpp"

namespace csk {

/// Concept attribution of one prediction under the vanilla gradient and
/// under SmoothGrad.
struct AttributionRecord {
    std::string prediction_id;  // sample or bounding box
    std::string concept_id;
    std::size_t run = 0;
    double attr_grad = 0.0;
    double attr_sg = 0.0;
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
};

struct SmoothGradConfig {
    std::size_t copies = 50;
    double noise_fraction = 0.10;  // sigma = fraction * (max(x) - min(x))
    std::uint64_t seed = 0;

    void validate() const;
};

/// Sign agreement of vanilla (truth) vs SmoothGrad (prediction)
/// attributions. A zero attribution counts as positive.
struct SignConfusion {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    double acc() const;
};

/// w . agg_mode(grad); the gradient is reduced with the CAV's own mode and
/// the bias does not take part.
double attribute(const Cav& cav, const Tensor& grad);

/// Mean tap gradient over `copies` noisy versions of x. The class neuron is
/// passed in by the caller (taken from the clean forward pass) and reused for
/// every copy. With zero noise this is exactly grad_at_tap.
Tensor smoothgrad_gradient(const RefNet& net, const Tensor& x, LayerTap tap, std::size_t class_idx,
                           const SmoothGradConfig& cfg);

double smoothgrad_attr(const Cav& cav, const RefNet& net, const Tensor& x, LayerTap tap, std::size_t class_idx,
                       const SmoothGradConfig& cfg);

/// Throws DataError for an empty record set.
SignConfusion sign_confusion(std::span<const AttributionRecord> records);

/// Concept attribution deviation of one prediction:
///   sum |attr_grad - attr_sg| / sum |attr_grad|
/// over all concepts and runs. nullopt when the denominator is zero.
std::optional<double> cad(std::span<const AttributionRecord> records);

/// Per-layer gradient-stability summary.
struct GradStabilitySummary {
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
    SignConfusion confusion;
    double cad_percent = 0.0;  // mean CAD over predictions, in percent
    std::size_t predictions = 0;
    std::size_t skipped = 0;  // predictions with an undefined CAD
};

/// Groups records by prediction_id (all from one layer and mode) and
/// computes the confusion counts and mean CAD.
GradStabilitySummary summarize_grad_stability(std::span<const AttributionRecord> records);

}  // namespace csk
