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

#include <algorithm>
#include <array>
#include <cmath>

#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/rng.hpp"

namespace csk {

void
SynthConfig::validate() const {
    if (width == 0 || height == 0) throw ConfigError("synth: canvas size must be positive");
    if (min_patches < 1) throw ConfigError("synth: at least one patch per sample is required");
    if (max_patches < min_patches) throw ConfigError("synth: max_patches < min_patches");
    if (!(min_scale > 0.0) || max_scale < min_scale) throw ConfigError("synth: invalid scale range");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("synth: threshold must lie in [0,1]");
    if (!background.empty() && background.shape() != Shape{3, height, width}) {
        throw ConfigError("synth: background image must be [3," + std::to_string(height) + "," +
                          std::to_string(width) + "]");
    }
    if (retry_cap == 0) throw ConfigError("synth: retry_cap must be positive");
}

namespace {

void
Paste(Tensor& canvas, const Superpixel& sp, std::size_t x0, std::size_t y0, std::size_t sh,
      std::size_t sw) {
    const std::size_t ph = sp.mask.dim(0), pw = sp.mask.dim(1);
    const std::size_t channels = std::min(canvas.dim(0), sp.patch.dim(0));
    for (std::size_t y = 0; y < sh; ++y) {
        const std::size_t src_y = y * ph / sh;
        for (std::size_t x = 0; x < sw; ++x) {
            const std::size_t src_x = x * pw / sw;
            if (sp.mask[src_y * pw + src_x] < 0.5f) continue;
            for (std::size_t c = 0; c < channels; ++c) {
                canvas.at(c, y0 + y, x0 + x) = sp.patch.at(c, src_y, src_x);
            }
        }
    }
}

}  // namespace

SyntheticSample
generate_synthetic_sample(const SuperpixelsByConcept& superpixels, const std::string& concept_id,
                          std::size_t index, const SynthConfig& cfg) {
    cfg.validate();
    auto it = superpixels.find(concept_id);
    if (it == superpixels.end() || it->second.empty()) {
        throw DataError("synth: concept '" + concept_id + "' has no superpixels");
    }
    const auto& pool = it->second;
    Rng rng(derive_seed(cfg.seed, "synth/" + concept_id, index));

    SyntheticSample sample;
    sample.concept_id = concept_id;
    sample.index = index;
    if (cfg.background.empty()) {
        sample.image = Tensor({3, cfg.height, cfg.width});
        for (float& v : sample.image.values()) v = static_cast<float>(rng.uniform());
    } else {
        sample.image = cfg.background;
    }

    const auto count = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(cfg.min_patches), static_cast<std::int64_t>(cfg.max_patches)));
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t which = static_cast<std::size_t>(rng.below(pool.size()));
        const Superpixel& sp = pool[which];
        if (sp.mask.rank() != 2 || sp.mask.empty()) {
            throw DataError("synth: superpixel with empty mask in concept '" + concept_id + "'");
        }
        bool placed = false;
        for (std::size_t attempt = 0; attempt < cfg.retry_cap && !placed; ++attempt) {
            const double scale = rng.uniform(cfg.min_scale, cfg.max_scale);
            const auto sh = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(static_cast<double>(sp.mask.dim(0)) * scale)));
            const auto sw = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(static_cast<double>(sp.mask.dim(1)) * scale)));
            if (sh > cfg.height || sw > cfg.width) continue;
            const auto y0 = static_cast<std::size_t>(rng.below(cfg.height - sh + 1));
            const auto x0 = static_cast<std::size_t>(rng.below(cfg.width - sw + 1));
            Paste(sample.image, sp, x0, y0, sh, sw);
            sample.placements.push_back({which, scale, PixelBox{x0, y0, x0 + sw, y0 + sh}});
            placed = true;
        }
        if (!placed) {
            throw DataError("synth: superpixel " + std::to_string(which) + " of concept '" + concept_id +
                            "' does not fit on a " + std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
                            " canvas after " + std::to_string(cfg.retry_cap) + " attempts");
        }
    }
    return sample;
}

void
for_each_synthetic_sample(const SuperpixelsByConcept& superpixels, const SynthConfig& cfg, std::size_t n,
                          const std::function<void(const SyntheticSample&)>& sink) {
    cfg.validate();
    if (superpixels.empty()) {
        throw ConfigError("synth: no concepts given");
    }
    for (const auto& [concept_id, _] : superpixels) {
        for (std::size_t i = 0; i < n; ++i) {
            sink(generate_synthetic_sample(superpixels, concept_id, i, cfg));
        }
    }
}

std::vector<SyntheticSample>
generate_synthetic_samples(const SuperpixelsByConcept& superpixels, const SynthConfig& cfg, std::size_t n) {
    std::vector<SyntheticSample> out;
    for_each_synthetic_sample(superpixels, cfg, n, [&](const SyntheticSample& s) { out.push_back(s); });
    return out;
}

SuperpixelsByConcept
builtin_shape_superpixels(std::size_t concepts, std::size_t per_concept, std::size_t size, std::uint64_t seed) {
    static constexpr std::array<const char*, 5> kNames{"disk", "square", "cross", "ring", "bar"};
    static constexpr std::array<std::array<float, 3>, 5> kColors{{
        {0.9f, 0.2f, 0.2f},
        {0.2f, 0.8f, 0.2f},
        {0.2f, 0.3f, 0.9f},
        {0.9f, 0.8f, 0.1f},
        {0.7f, 0.2f, 0.8f},
    }};
    if (concepts == 0 || concepts > kNames.size()) {
        throw ConfigError("builtin superpixels: concepts must lie in 1..5");
    }
    if (size < 5) {
        throw ConfigError("builtin superpixels: size must be at least 5 pixels");
    }
    SuperpixelsByConcept out;
    for (std::size_t j = 0; j < concepts; ++j) {
        Rng rng(derive_seed(seed, std::string("builtin/") + kNames[j]));
        for (std::size_t i = 0; i < per_concept; ++i) {
            const auto s = static_cast<std::size_t>(
                std::max(5.0, std::round(static_cast<double>(size) * rng.uniform(0.8, 1.2))));
            Superpixel sp;
            sp.mask = Tensor({s, s});
            sp.patch = Tensor({3, s, s});
            sp.box = PixelBox{0, 0, s, s};
            sp.source = "builtin";
            sp.concept_id = kNames[j];
            std::array<float, 3> color;
            for (std::size_t c = 0; c < 3; ++c) {
                color[c] = static_cast<float>(std::clamp(kColors[j][c] + rng.uniform(-0.1, 0.1), 0.0, 1.0));
            }
            const double mid = (static_cast<double>(s) - 1.0) / 2.0;
            const double radius = static_cast<double>(s) / 2.0;
            for (std::size_t y = 0; y < s; ++y) {
                for (std::size_t x = 0; x < s; ++x) {
                    const double dy = static_cast<double>(y) - mid, dx = static_cast<double>(x) - mid;
                    const double r = std::sqrt(dx * dx + dy * dy);
                    bool on = false;
                    switch (j) {
                        case 0: on = r <= radius; break;
                        case 1: on = true; break;
                        case 2: on = std::abs(dx) <= radius / 3.0 || std::abs(dy) <= radius / 3.0; break;
                        case 3: on = r <= radius && r >= radius * 0.55; break;
                        default: on = std::abs(dy) <= radius / 2.5; break;
                    }
                    if (!on) continue;
                    sp.mask[y * s + x] = 1.0f;
                    for (std::size_t c = 0; c < 3; ++c) sp.patch.at(c, y, x) = color[c];
                }
            }
            out[kNames[j]].push_back(std::move(sp));
        }
    }
    return out;
}

}  // namespace csk
