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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csk/cav.hpp"
#include "csk/tensor.hpp"

namespace csk {

// ---- NMF ------------------------------------------------------------------

struct NmfOptions {
    std::size_t rank = 1;
    std::size_t max_iters = 200;
    double tol = 1e-5;  // stop once the relative objective improvement drops below this
    std::uint64_t seed = 0;
};

/// A ~= W * H with W [M,k] and H [k,C], both non-negative. Rows of H are the
/// mined concept vectors.
struct NmfModel {
    std::size_t rank = 0;
    Tensor w;  // [M,k]
    Tensor h;  // [k,C]
    double error = 0.0;              // ||A - W H||_F after the last update
    std::vector<double> objective;   // ||A - W H||_F^2, initial value then one entry per iteration
    bool clamped_negatives = false;  // negative input entries were set to 0
};

/// Lee-Seung multiplicative updates on the Frobenius objective.
/// Throws ConfigError if k is 0 or exceeds min(M,C), DataError if A is all zero.
NmfModel nmf_factorize(const Tensor& a, const NmfOptions& opts);
NmfModel nmf_factorize(const Tensor& a, std::size_t k, std::size_t iters, std::uint64_t seed);

/// Stacks [C,H,W] activations into [N*H*W, C]; one row per spatial position.
Tensor activation_matrix(std::span<const Tensor> acts);

struct Ncav {
    std::size_t layer_id = 0;
    std::vector<float> vector;  // length C, entries >= 0
    std::size_t component_index = 0;
};

/// Rows of H as NCAVs; all-zero rows are dropped.
std::vector<Ncav> ncavs_from_model(const NmfModel& model, std::size_t layer_id);

/// sum_c ncav[c] * act[c,h,w], min-max normalized to [0,1]. A constant map
/// normalizes to all zeros.
Tensor ncav_heatmap(const Ncav& ncav, const Tensor& act);

// ---- superpixels ------------------------------------------------------------

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct PixelBox {
    std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    std::size_t width() const { return x1 - x0; }
    std::size_t height() const { return y1 - y0; }
    friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct Superpixel {
    Tensor patch;  // [3,h,w] image crop, zero outside the mask
    Tensor mask;   // [h,w] with values 0 or 1
    PixelBox box;  // location in the source image
    std::string source;
    std::string concept_id;  // empty until a human labels it
};

inline constexpr std::size_t kMinSuperpixelArea = 25;

/// Nearest-neighbour resize of an [H,W] map.
Tensor upsample_nearest(const Tensor& map, std::size_t height, std::size_t width);

/// Binarizes the heatmap (>= threshold) at image resolution and cuts one
/// superpixel per 4-connected component of at least `min_area` pixels.
/// Components are ordered by their first pixel in row-major order.
std::vector<Superpixel> extract_superpixels(const Tensor& image, const Tensor& heatmap, double threshold = 0.5,
                                            std::size_t min_area = kMinSuperpixelArea);

// ---- synthetic concept samples ---------------------------------------------

struct SynthConfig {
    std::size_t width = 640;
    std::size_t height = 480;
    std::size_t min_patches = 1;
    std::size_t max_patches = 5;
    double min_scale = 0.9;
    double max_scale = 1.1;
    Tensor background;  // optional [3,height,width]; empty means U[0,1) noise
    double threshold = 0.5;
    std::uint64_t seed = 0;
    std::size_t retry_cap = 32;

    void validate() const;
};

struct Placement {
    std::size_t superpixel_index = 0;
    double scale = 1.0;
    PixelBox box;
};

struct SyntheticSample {
    Tensor image;  // [3,height,width]
    std::string concept_id;
    std::size_t index = 0;
    std::vector<Placement> placements;
};

using SuperpixelsByConcept = std::map<std::string, std::vector<Superpixel>>;

/// Sample `index` of `concept_id`: 1..5 patches of that concept only, each
/// rescaled by a factor in [min_scale, max_scale] and pasted at a uniform
/// position that keeps it fully on the canvas. A pure function of
/// (cfg.seed, concept_id, index).
SyntheticSample generate_synthetic_sample(const SuperpixelsByConcept& superpixels, const std::string& concept_id,
                                          std::size_t index, const SynthConfig& cfg);

/// n samples per concept, concepts in name order.
std::vector<SyntheticSample> generate_synthetic_samples(const SuperpixelsByConcept& superpixels,
                                                        const SynthConfig& cfg, std::size_t n);

/// Streaming form of generate_synthetic_samples for full-size canvases.
void for_each_synthetic_sample(const SuperpixelsByConcept& superpixels, const SynthConfig& cfg, std::size_t n,
                               const std::function<void(const SyntheticSample&)>& sink);

/// Procedural stand-in superpixels (disks, squares, crosses, rings, bars) for
/// demos and tests when no mined patches exist. At most 5 concepts.
SuperpixelsByConcept builtin_shape_superpixels(std::size_t concepts, std::size_t per_concept, std::size_t size,
                                               std::uint64_t seed);

// ---- ground-truth activations -------------------------------------------------

/// Concept j raises channel channel_of_concept[j] by `snr` at every spatial
/// position; every entry gets unit Gaussian noise and is clamped at 0. The
/// result is separable after 1D aggregation and inseparable after 2D
/// aggregation. Concept ids are "concept0", "concept1", ...
ConceptDataset generate_channel_coded_activations(std::size_t n_concepts, std::size_t samples_each,
                                                  std::size_t channels, std::size_t height, std::size_t width,
                                                  double snr, std::uint64_t seed, std::size_t layer_id = 0);
ConceptDataset generate_channel_coded_activations(std::size_t n_concepts, std::size_t samples_each,
                                                  std::size_t channels, std::size_t height, std::size_t width,
                                                  double snr, std::uint64_t seed, std::size_t layer_id,
                                                  std::span<const std::size_t> channel_of_concept);

}  // namespace csk
