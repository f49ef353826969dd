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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csk/aggregate.hpp"
#include "csk/tensor.hpp"

namespace csk {

/// Activations of labelled concept samples, all extracted at one layer.
class ConceptDataset {
public:
    explicit ConceptDataset(std::size_t layer_id = 0) : layer_id_(layer_id) {}

    /// Adds one [C,H,W] activation. Every sample must share the same shape.
    void add(const std::string& concept_id, Tensor act);

    std::size_t layer_id() const { return layer_id_; }
    const Shape& layer_shape() const { return layer_shape_; }
    const std::map<std::string, std::vector<Tensor>>& concepts() const { return concepts_; }
    std::vector<std::string> concept_ids() const;
    bool contains(const std::string& concept_id) const { return concepts_.count(concept_id) != 0; }
    const std::vector<Tensor>& samples(const std::string& concept_id) const;
    std::size_t total_samples() const;

    /// Throws DataError unless every concept has at least two samples.
    void validate() const;

private:
    std::size_t layer_id_;
    Shape layer_shape_;
    std::map<std::string, std::vector<Tensor>> concepts_;
};

struct SampleRef {
    std::string concept_id;
    std::size_t index = 0;

    friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

/// Train/validation partition of one run. Negatives are drawn from every
/// other concept and downsampled so that |neg| == |pos| in each part.
struct RunSplit {
    std::vector<SampleRef> train_pos;
    std::vector<SampleRef> train_neg;
    std::vector<SampleRef> val_pos;
    std::vector<SampleRef> val_neg;
};

struct TrainConfig {
    std::size_t runs = 15;
    double train_fraction = 0.8;
    double val_fraction = 0.2;
    std::size_t epochs = 500;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    double init_scale = 0.01;
    std::uint64_t base_seed = 0;
    /// When set, only this many positive training samples are used per run
    /// (the validation part is unaffected). Drives the sample-count sweep.
    std::optional<std::size_t> train_samples;

    void validate() const;
};

/// A trained concept activation vector.
///
/// `weights` is the CAV direction in the standardized feature space of its
/// mode; the bias and standardization statistics are kept for inference but
/// are not part of the direction.
struct Cav {
    std::string concept_id;
    std::size_t layer_id = 0;
    CavMode mode = CavMode::OneD;
    Shape layer_shape;  // [C,H,W] of the layer the CAV was trained on
    std::vector<float> weights;
    float bias = 0.0f;
    std::vector<float> feature_mean;
    std::vector<float> feature_scale;
    std::uint64_t run_seed = 0;
    float train_f1 = 0.0f;
    bool convergence_warning = false;
    RunSplit split;  // not persisted in .cav files

    /// Shape of the weights as a tensor: C x 1 x 1, 1 x H x W or C x H x W.
    Shape weight_shape() const;
};

/// The run's train/validation partition; a pure function of run_seed.
RunSplit make_run_split(const ConceptDataset& ds, const std::string& concept_id, const TrainConfig& cfg,
                        std::uint64_t run_seed);

/// One-against-all logistic regression on mode-aggregated activations.
Cav train_cav(const ConceptDataset& ds, const std::string& concept_id, CavMode mode, std::uint64_t run_seed,
              const TrainConfig& cfg = {});

/// cfg.runs CAVs; run i uses seed cfg.base_seed + i.
std::vector<Cav> train_ensemble(const ConceptDataset& ds, const std::string& concept_id, CavMode mode,
                                const TrainConfig& cfg, std::size_t jobs = 1);

/// Concept presence score sigmoid(w . standardize(agg(act)) + b), in (0,1).
float cav_inference(const Cav& cav, const Tensor& act);
/// Same, on features already aggregated with the CAV's mode.
float cav_inference_features(const Cav& cav, std::span<const double> features);
double cav_logit_features(const Cav& cav, std::span<const double> features);

/// F1 of the positive class; defined as 0 when there are no true positives.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Positive-class F1 of the CAV on the given positives/negatives.
double evaluate_f1(const Cav& cav, const ConceptDataset& ds, std::span<const SampleRef> positives,
                   std::span<const SampleRef> negatives);

// ---- .cav files ---------------------------------------------------------

void write_cav(const std::filesystem::path& path, const Cav& cav);
Cav read_cav(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_cav(const Cav& cav);
Cav decode_cav(std::span<const std::uint8_t> bytes);

}  // namespace csk
