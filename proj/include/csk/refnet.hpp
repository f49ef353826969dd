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
#include <span>
#include <vector>

#include "csk/tensor.hpp"

namespace csk {

struct RefNetConfig {
    std::size_t in_channels = 3;
    std::vector<std::size_t> widths{4, 8, 8};  // one Conv3x3 -> ReLU block per entry
    std::size_t classes = 3;
    std::size_t input_height = 16;  // default input size used by the CLI
    std::size_t input_width = 16;
    std::size_t max_spatial = 64;  // accepted inputs: 1..max_spatial per axis
    std::uint64_t seed = 0;
    bool zero_bias = false;

    void validate() const;
};

struct ConvBlockWeights {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::vector<float> kernel;  // [out, in, 3, 3]
    std::vector<float> bias;    // [out]
};

struct RefNetWeights {
    std::vector<ConvBlockWeights> blocks;
    std::vector<float> head;       // [classes, widths.back()]
    std::vector<float> head_bias;  // [classes]
};

/// Designates the ReLU output of block `layer_id` as the probed layer.
struct LayerTap {
    std::size_t layer_id = 0;
};

/// Seed-derived weights: uniform in [-s, s], s = 1/sqrt(fan_in), drawn from
/// Rng(seed) block by block (kernel, then bias), then the head.
RefNetWeights make_refnet_weights(const RefNetConfig& cfg);

/// Small deterministic CNN: {Conv3x3(stride 1, pad 1) -> ReLU} x L, global
/// average pool, linear head.
///
/// forward_to() is the part of the network up to a tap; scores_from_tap()
/// and grad_at_tap() are the part from the tap to the class scores.
/// Arithmetic runs in f64 internally; weights and public tensors are f32.
class RefNet {
public:
    explicit RefNet(RefNetConfig cfg);
    RefNet(RefNetConfig cfg, RefNetWeights weights);

    const RefNetConfig& config() const { return cfg_; }
    const RefNetWeights& weights() const { return weights_; }
    std::size_t num_blocks() const { return cfg_.widths.size(); }
    std::size_t num_classes() const { return cfg_.classes; }

    /// [C,H,W] shape of the tap for an input of spatial size h x w.
    Shape tap_shape(LayerTap tap, std::size_t h, std::size_t w) const;

    /// Activation (post-ReLU) at the tap.
    Tensor forward_to(const Tensor& x, LayerTap tap) const;
    /// Convolution output of the tap block before its ReLU.
    Tensor pre_activation(const Tensor& x, LayerTap tap) const;

    std::vector<double> scores(const Tensor& x) const;
    std::size_t predict(const Tensor& x) const;

    /// Class scores given a tap activation laid out as [C,H,W].
    std::vector<double> scores_from_tap(LayerTap tap, std::span<const double> act, std::size_t height,
                                        std::size_t width) const;

    /// d score[class_idx] / d activation at the tap, via backpropagation.
    Tensor grad_at_tap(const Tensor& x, LayerTap tap, std::size_t class_idx) const;
    std::vector<double> grad_at_tap_f64(const Tensor& x, LayerTap tap, std::size_t class_idx) const;

private:
    struct Map {
        std::size_t channels = 0, height = 0, width = 0;
        std::vector<double> values;
    };

    void check_input(const Tensor& x) const;
    void check_tap(LayerTap tap) const;
    Map input_map(const Tensor& x) const;
    Map conv(std::size_t block, const Map& in) const;
    static void relu(Map& m);
    Map run_to(const Tensor& x, LayerTap tap, bool keep_pre_activation) const;
    std::vector<double> head_scores(const Map& last) const;
    std::vector<double> backward_from_tap(LayerTap tap, const Map& tap_act, std::size_t class_idx) const;

    RefNetConfig cfg_;
    RefNetWeights weights_;
    // f64 copies of the weights used by the kernels.
    std::vector<std::vector<double>> kernels_;
    std::vector<std::vector<double>> biases_;
    std::vector<double> head_;
    std::vector<double> head_bias_;
};

Tensor to_tensor(Shape shape, std::span<const double> values);

}  // namespace csk
