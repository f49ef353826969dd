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

#include "csk/refnet.hpp"

#include <algorithm>
#include <cmath>

#include "csk/error.hpp"
#include "csk/rng.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

void
RefNetConfig::validate() const {
    if (in_channels == 0) throw ConfigError("refnet: in_channels must be positive");
    if (widths.empty()) throw ConfigError("refnet: at least one conv block is required");
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError("refnet: block widths must be positive");
    }
    if (classes == 0) throw ConfigError("refnet: classes must be positive");
    if (max_spatial == 0) throw ConfigError("refnet: max_spatial must be positive");
    if (input_height == 0 || input_width == 0 || input_height > max_spatial || input_width > max_spatial) {
        throw ConfigError("refnet: input size must lie in 1..max_spatial");
    }
}

RefNetWeights
make_refnet_weights(const RefNetConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    auto draw = [&](std::vector<float>& out, std::size_t n, double scale) {
        out.resize(n);
        for (auto& v : out) {
            v = static_cast<float>(rng.uniform(-scale, scale));
        }
    };
    RefNetWeights w;
    std::size_t in = cfg.in_channels;
    for (std::size_t out : cfg.widths) {
        ConvBlockWeights block;
        block.in_channels = in;
        block.out_channels = out;
        const double scale = 1.0 / std::sqrt(static_cast<double>(in * 9));
        draw(block.kernel, out * in * 9, scale);
        draw(block.bias, out, scale);
        if (cfg.zero_bias) {
            std::fill(block.bias.begin(), block.bias.end(), 0.0f);
        }
        w.blocks.push_back(std::move(block));
        in = out;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    draw(w.head, cfg.classes * in, scale);
    draw(w.head_bias, cfg.classes, scale);
    if (cfg.zero_bias) {
        std::fill(w.head_bias.begin(), w.head_bias.end(), 0.0f);
    }
    return w;
}

RefNet::RefNet(RefNetConfig cfg) : RefNet(cfg, make_refnet_weights(cfg)) {}

RefNet::RefNet(RefNetConfig cfg, RefNetWeights weights) : cfg_(std::move(cfg)), weights_(std::move(weights)) {
    cfg_.validate();
    if (weights_.blocks.size() != cfg_.widths.size()) {
        throw ConfigError("refnet: weight blocks do not match the configured depth");
    }
    std::size_t in = cfg_.in_channels;
    for (std::size_t b = 0; b < weights_.blocks.size(); ++b) {
        const auto& block = weights_.blocks[b];
        if (block.in_channels != in || block.out_channels != cfg_.widths[b] ||
            block.kernel.size() != block.out_channels * block.in_channels * 9 ||
            block.bias.size() != block.out_channels) {
            throw ConfigError("refnet: block " + std::to_string(b) + " weights have the wrong shape");
        }
        kernels_.emplace_back(block.kernel.begin(), block.kernel.end());
        biases_.emplace_back(block.bias.begin(), block.bias.end());
        in = block.out_channels;
    }
    if (weights_.head.size() != cfg_.classes * in || weights_.head_bias.size() != cfg_.classes) {
        throw ConfigError("refnet: head weights have the wrong shape");
    }
    head_.assign(weights_.head.begin(), weights_.head.end());
    head_bias_.assign(weights_.head_bias.begin(), weights_.head_bias.end());
}

Shape
RefNet::tap_shape(LayerTap tap, std::size_t h, std::size_t w) const {
    check_tap(tap);
    return {cfg_.widths[tap.layer_id], h, w};
}

void
RefNet::check_input(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(0) != cfg_.in_channels) {
        throw ShapeError("refnet input must be [" + std::to_string(cfg_.in_channels) + ",H,W], got " +
                         shape_to_string(x.shape()));
    }
    if (x.dim(1) == 0 || x.dim(2) == 0 || x.dim(1) > cfg_.max_spatial || x.dim(2) > cfg_.max_spatial) {
        throw ShapeError("refnet input spatial size " + shape_to_string(x.shape()) + " outside 1.." +
                         std::to_string(cfg_.max_spatial));
    }
}

void
RefNet::check_tap(LayerTap tap) const {
    if (tap.layer_id >= num_blocks()) {
        throw IndexError("layer tap " + std::to_string(tap.layer_id) + " out of range (" +
                         std::to_string(num_blocks()) + " blocks)");
    }
}

RefNet::Map
RefNet::input_map(const Tensor& x) const {
    check_input(x);
    return Map{x.dim(0), x.dim(1), x.dim(2), std::vector<double>(x.values().begin(), x.values().end())};
}

RefNet::Map
RefNet::conv(std::size_t block, const Map& in) const {
    const auto& k = simd::active();
    const std::size_t ci = in.channels, co = cfg_.widths[block];
    const std::size_t h = in.height, w = in.width, plane = h * w;
    const auto& kernel = kernels_[block];
    Map out{co, h, w, std::vector<double>(co * plane)};
    for (std::size_t o = 0; o < co; ++o) {
        double* dst = out.values.data() + o * plane;
        std::fill(dst, dst + plane, biases_[block][o]);
        for (std::size_t i = 0; i < ci; ++i) {
            const double* src = in.values.data() + i * plane;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const double wv = kernel[((o * ci + i) * 3 + ky) * 3 + kx];
                    const auto dy = static_cast<std::ptrdiff_t>(ky) - 1;
                    const auto dx = static_cast<std::ptrdiff_t>(kx) - 1;
                    const std::size_t x0 = dx < 0 ? 1 : 0;
                    const std::size_t x1 = dx > 0 ? w - 1 : w;
                    if (x1 <= x0) continue;
                    for (std::size_t y = 0; y < h; ++y) {
                        const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* srow = src + static_cast<std::size_t>(sy) * w;
                        k.axpy_f64(wv, srow + static_cast<std::ptrdiff_t>(x0) + dx, dst + y * w + x0, x1 - x0);
                    }
                }
            }
        }
    }
    return out;
}

void
RefNet::relu(Map& m) {
    for (double& v : m.values) {
        v = v > 0.0 ? v : 0.0;
    }
}

RefNet::Map
RefNet::run_to(const Tensor& x, LayerTap tap, bool keep_pre_activation) const {
    check_tap(tap);
    Map cur = input_map(x);
    for (std::size_t b = 0; b <= tap.layer_id; ++b) {
        cur = conv(b, cur);
        if (b == tap.layer_id && keep_pre_activation) {
            return cur;
        }
        relu(cur);
    }
    return cur;
}

Tensor
RefNet::forward_to(const Tensor& x, LayerTap tap) const {
    Map m = run_to(x, tap, false);
    return to_tensor({m.channels, m.height, m.width}, m.values);
}

Tensor
RefNet::pre_activation(const Tensor& x, LayerTap tap) const {
    Map m = run_to(x, tap, true);
    return to_tensor({m.channels, m.height, m.width}, m.values);
}

std::vector<double>
RefNet::head_scores(const Map& last) const {
    const auto& k = simd::active();
    const std::size_t plane = last.height * last.width;
    std::vector<double> pooled(last.channels);
    for (std::size_t c = 0; c < last.channels; ++c) {
        pooled[c] = k.sum_f64(last.values.data() + c * plane, plane) / static_cast<double>(plane);
    }
    std::vector<double> scores(cfg_.classes);
    for (std::size_t j = 0; j < cfg_.classes; ++j) {
        scores[j] = head_bias_[j] + k.dot_f64(head_.data() + j * last.channels, pooled.data(), last.channels);
    }
    return scores;
}

std::vector<double>
RefNet::scores(const Tensor& x) const {
    return head_scores(run_to(x, LayerTap{num_blocks() - 1}, false));
}

std::size_t
RefNet::predict(const Tensor& x) const {
    const auto s = scores(x);
    return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

std::vector<double>
RefNet::scores_from_tap(LayerTap tap, std::span<const double> act, std::size_t height, std::size_t width) const {
    check_tap(tap);
    const std::size_t channels = cfg_.widths[tap.layer_id];
    if (act.size() != channels * height * width) {
        throw ShapeError("scores_from_tap: activation length does not match [" + std::to_string(channels) + "," +
                         std::to_string(height) + "," + std::to_string(width) + "]");
    }
    Map cur{channels, height, width, std::vector<double>(act.begin(), act.end())};
    for (std::size_t b = tap.layer_id + 1; b < num_blocks(); ++b) {
        cur = conv(b, cur);
        relu(cur);
    }
    return head_scores(cur);
}

std::vector<double>
RefNet::backward_from_tap(LayerTap tap, const Map& tap_act, std::size_t class_idx) const {
    const auto& k = simd::active();
    // Forward through the remaining blocks, keeping pre-activations for the
    // ReLU masks.
    std::vector<Map> pre;
    Map cur = tap_act;
    for (std::size_t b = tap.layer_id + 1; b < num_blocks(); ++b) {
        Map z = conv(b, cur);
        pre.push_back(z);
        relu(z);
        cur = std::move(z);
    }

    const std::size_t h = tap_act.height, w = tap_act.width, plane = h * w;
    const std::size_t last_channels = cfg_.widths.back();
    std::vector<double> grad(last_channels * plane);
    for (std::size_t c = 0; c < last_channels; ++c) {
        const double g = head_[class_idx * last_channels + c] / static_cast<double>(plane);
        std::fill(grad.begin() + static_cast<std::ptrdiff_t>(c * plane),
                  grad.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane), g);
    }

    for (std::size_t b = num_blocks() - 1; b > tap.layer_id; --b) {
        const Map& z = pre[b - tap.layer_id - 1];
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (!(z.values[i] > 0.0)) grad[i] = 0.0;
        }
        const std::size_t co = cfg_.widths[b];
        const std::size_t ci = cfg_.widths[b - 1];
        const auto& kernel = kernels_[b];
        std::vector<double> din(ci * plane, 0.0);
        for (std::size_t o = 0; o < co; ++o) {
            const double* gout = grad.data() + o * plane;
            for (std::size_t i = 0; i < ci; ++i) {
                double* dst = din.data() + i * plane;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const double wv = kernel[((o * ci + i) * 3 + ky) * 3 + kx];
                        const auto dy = static_cast<std::ptrdiff_t>(ky) - 1;
                        const auto dx = static_cast<std::ptrdiff_t>(kx) - 1;
                        const std::size_t x0 = dx < 0 ? 1 : 0;
                        const std::size_t x1 = dx > 0 ? w - 1 : w;
                        if (x1 <= x0) continue;
                        for (std::size_t y = 0; y < h; ++y) {
                            const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                            double* drow = dst + static_cast<std::size_t>(sy) * w;
                            k.axpy_f64(wv, gout + y * w + x0, drow + static_cast<std::ptrdiff_t>(x0) + dx, x1 - x0);
                        }
                    }
                }
            }
        }
        grad = std::move(din);
    }
    return grad;
}

std::vector<double>
RefNet::grad_at_tap_f64(const Tensor& x, LayerTap tap, std::size_t class_idx) const {
    if (class_idx >= cfg_.classes) {
        throw IndexError("class index " + std::to_string(class_idx) + " out of range (" +
                         std::to_string(cfg_.classes) + " classes)");
    }
    Map act = run_to(x, tap, false);
    return backward_from_tap(tap, act, class_idx);
}

Tensor
RefNet::grad_at_tap(const Tensor& x, LayerTap tap, std::size_t class_idx) const {
    auto g = grad_at_tap_f64(x, tap, class_idx);
    return to_tensor(tap_shape(tap, x.dim(1), x.dim(2)), g);
}

Tensor
to_tensor(Shape shape, std::span<const double> values) {
    return Tensor(std::move(shape), std::vector<float>(values.begin(), values.end()));
}

}  // namespace csk
