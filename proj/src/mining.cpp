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
#include <numeric>

#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/rng.hpp"

namespace csk {

Tensor
upsample_nearest(const Tensor& map, std::size_t height, std::size_t width) {
    map.require_rank(2, "upsample_nearest");
    const std::size_t sh = map.dim(0), sw = map.dim(1);
    if (sh == 0 || sw == 0) {
        throw ShapeError("upsample_nearest: empty map");
    }
    Tensor out({height, width});
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t src_y = y * sh / height;
        for (std::size_t x = 0; x < width; ++x) {
            out[y * width + x] = map[src_y * sw + x * sw / width];
        }
    }
    return out;
}

std::vector<Superpixel>
extract_superpixels(const Tensor& image, const Tensor& heatmap, double threshold, std::size_t min_area) {
    image.require_rank(3, "extract_superpixels image");
    heatmap.require_rank(2, "extract_superpixels heatmap");
    const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
    const Tensor full = upsample_nearest(heatmap, h, w);

    std::vector<std::uint8_t> mask(h * w);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = full[i] >= threshold ? 1 : 0;
    }

    // 4-connected component labelling by iterative flood fill.
    std::vector<std::int32_t> label(h * w, -1);
    std::vector<Superpixel> out;
    std::vector<std::size_t> stack;
    std::vector<std::size_t> members;
    std::int32_t next_label = 0;
    for (std::size_t seed = 0; seed < mask.size(); ++seed) {
        if (!mask[seed] || label[seed] >= 0) continue;
        members.clear();
        stack.push_back(seed);
        label[seed] = next_label;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const std::size_t y = p / w, x = p % w;
            auto visit = [&](std::size_t q) {
                if (mask[q] && label[q] < 0) {
                    label[q] = next_label;
                    stack.push_back(q);
                }
            };
            if (x > 0) visit(p - 1);
            if (x + 1 < w) visit(p + 1);
            if (y > 0) visit(p - w);
            if (y + 1 < h) visit(p + w);
        }
        const std::int32_t this_label = next_label++;
        if (members.size() < min_area) continue;

        PixelBox box{w, h, 0, 0};
        for (std::size_t p : members) {
            box.x0 = std::min(box.x0, p % w);
            box.y0 = std::min(box.y0, p / w);
            box.x1 = std::max(box.x1, p % w + 1);
            box.y1 = std::max(box.y1, p / w + 1);
        }
        Superpixel sp;
        sp.box = box;
        sp.mask = Tensor({box.height(), box.width()});
        sp.patch = Tensor({channels, box.height(), box.width()});
        for (std::size_t y = box.y0; y < box.y1; ++y) {
            for (std::size_t x = box.x0; x < box.x1; ++x) {
                if (label[y * w + x] != this_label) continue;
                const std::size_t ly = y - box.y0, lx = x - box.x0;
                sp.mask[ly * box.width() + lx] = 1.0f;
                for (std::size_t c = 0; c < channels; ++c) {
                    sp.patch.at(c, ly, lx) = image.at(c, y, x);
                }
            }
        }
        out.push_back(std::move(sp));
    }
    return out;
}

ConceptDataset
generate_channel_coded_activations(std::size_t n_concepts, std::size_t samples_each, std::size_t channels,
                                   std::size_t height, std::size_t width, double snr, std::uint64_t seed,
                                   std::size_t layer_id) {
    std::vector<std::size_t> identity(n_concepts);
    std::iota(identity.begin(), identity.end(), 0);
    return generate_channel_coded_activations(n_concepts, samples_each, channels, height, width, snr, seed,
                                              layer_id, identity);
}

ConceptDataset
generate_channel_coded_activations(std::size_t n_concepts, std::size_t samples_each, std::size_t channels,
                                   std::size_t height, std::size_t width, double snr, std::uint64_t seed,
                                   std::size_t layer_id, std::span<const std::size_t> channel_of_concept) {
    if (n_concepts > channels) {
        throw ConfigError("channel-coded activations: " + std::to_string(n_concepts) + " concepts need at least " +
                          std::to_string(n_concepts) + " channels, got " + std::to_string(channels));
    }
    if (channel_of_concept.size() != n_concepts) {
        throw ConfigError("channel-coded activations: need one channel per concept");
    }
    for (std::size_t ch : channel_of_concept) {
        if (ch >= channels) throw ConfigError("channel-coded activations: channel index out of range");
    }
    if (height == 0 || width == 0) {
        throw ConfigError("channel-coded activations: empty spatial size");
    }
    ConceptDataset ds(layer_id);
    const std::size_t plane = height * width;
    for (std::size_t j = 0; j < n_concepts; ++j) {
        const std::string id = "concept" + std::to_string(j);
        for (std::size_t s = 0; s < samples_each; ++s) {
            Rng rng(derive_seed(seed, "channel-coded/" + std::to_string(layer_id) + "/" + id, s));
            Tensor t({channels, height, width});
            for (std::size_t c = 0; c < channels; ++c) {
                const double mean = c == channel_of_concept[j] ? snr : 0.0;
                for (std::size_t p = 0; p < plane; ++p) {
                    t[c * plane + p] = static_cast<float>(std::max(0.0, mean + rng.normal()));
                }
            }
            ds.add(id, std::move(t));
        }
    }
    return ds;
}

}  // namespace csk
