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

#include "csk/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "csk/error.hpp"
#include "csk/rng.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

void
SmoothGradConfig::validate() const {
    if (copies < 1) throw ConfigError("smoothgrad: copies must be at least 1");
    if (!(noise_fraction >= 0.0)) throw ConfigError("smoothgrad: noise fraction must be non-negative");
}

double
SignConfusion::acc() const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double
attribute(const Cav& cav, const Tensor& grad) {
    if (grad.shape() != cav.layer_shape) {
        throw ShapeError("attribute: gradient shape " + shape_to_string(grad.shape()) +
                         " does not match the CAV layer " + shape_to_string(cav.layer_shape));
    }
    const auto features = aggregate_features(cav.mode, grad);
    if (features.size() != cav.weights.size()) {
        throw ShapeError("attribute: CAV has " + std::to_string(cav.weights.size()) + " weights, mode " +
                         std::string(to_string(cav.mode)) + " gives " + std::to_string(features.size()));
    }
    return simd::active().dot_f64_f32(features.data(), cav.weights.data(), features.size());
}

Tensor
smoothgrad_gradient(const RefNet& net, const Tensor& x, LayerTap tap, std::size_t class_idx,
                    const SmoothGradConfig& cfg) {
    cfg.validate();
    const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
    const double sigma = x.empty() ? 0.0 : cfg.noise_fraction * (static_cast<double>(*hi) - *lo);
    if (!(sigma > 0.0)) {
        // Every copy equals x, so the mean is the clean gradient.
        return net.grad_at_tap(x, tap, class_idx);
    }
    std::vector<double> acc;
    Tensor noisy = x;
    for (std::size_t j = 0; j < cfg.copies; ++j) {
        Rng rng(derive_seed(cfg.seed, "smoothgrad", j));
        for (std::size_t i = 0; i < x.size(); ++i) {
            noisy[i] = static_cast<float>(static_cast<double>(x[i]) + sigma * rng.normal());
        }
        const auto g = net.grad_at_tap_f64(noisy, tap, class_idx);
        if (acc.empty()) acc.assign(g.size(), 0.0);
        simd::active().axpy_f64(1.0, g.data(), acc.data(), g.size());
    }
    const double inv = 1.0 / static_cast<double>(cfg.copies);
    for (double& v : acc) v *= inv;
    return to_tensor(net.tap_shape(tap, x.dim(1), x.dim(2)), acc);
}

double
smoothgrad_attr(const Cav& cav, const RefNet& net, const Tensor& x, LayerTap tap, std::size_t class_idx,
                const SmoothGradConfig& cfg) {
    return attribute(cav, smoothgrad_gradient(net, x, tap, class_idx, cfg));
}

SignConfusion
sign_confusion(std::span<const AttributionRecord> records) {
    if (records.empty()) {
        throw DataError("sign_confusion: no attribution records");
    }
    SignConfusion out;
    for (const auto& r : records) {
        const bool truth = r.attr_grad >= 0.0;
        const bool pred = r.attr_sg >= 0.0;
        if (truth && pred) ++out.tp;
        else if (truth) ++out.fn;
        else if (pred) ++out.fp;
        else ++out.tn;
    }
    return out;
}

std::optional<double>
cad(std::span<const AttributionRecord> records) {
    double num = 0.0, den = 0.0;
    for (const auto& r : records) {
        num += std::abs(r.attr_grad - r.attr_sg);
        den += std::abs(r.attr_grad);
    }
    if (!(den > 0.0)) {
        return std::nullopt;
    }
    return num / den;
}

GradStabilitySummary
summarize_grad_stability(std::span<const AttributionRecord> records) {
    GradStabilitySummary s;
    s.confusion = sign_confusion(records);
    s.layer_id = records.front().layer_id;
    s.mode = records.front().mode;

    std::map<std::string, std::vector<AttributionRecord>> by_prediction;
    for (const auto& r : records) {
        if (r.layer_id != s.layer_id || r.mode != s.mode) {
            throw DataError("summarize_grad_stability: records mix layers or modes");
        }
        by_prediction[r.prediction_id].push_back(r);
    }
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& [id, recs] : by_prediction) {
        if (auto v = cad(recs)) {
            sum += *v;
            ++defined;
        } else {
            ++s.skipped;
            spdlog::warn("CAD undefined for prediction '{}' (all vanilla attributions are zero); skipped", id);
        }
    }
    s.predictions = by_prediction.size();
    s.cad_percent = defined ? 100.0 * sum / static_cast<double>(defined) : 0.0;
    return s;
}

}  // namespace csk
