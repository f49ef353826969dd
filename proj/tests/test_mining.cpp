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
#include <cmath>
#include <set>

#include <doctest.h>

#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/stability.hpp"
#include "test_util.hpp"

using namespace csk;

namespace {

// Independent labelling oracle: repeatedly pick an unlabelled foreground
// pixel and grow its component by scanning the whole image until no pixel
// changes, without an explicit stack.
std::vector<std::set<std::size_t>>
BruteForceComponents(const std::vector<std::uint8_t>& mask, std::size_t h, std::size_t w) {
    std::vector<int> label(mask.size(), -1);
    std::vector<std::set<std::size_t>> out;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || label[start] >= 0) continue;
        const int id = static_cast<int>(out.size());
        label[start] = id;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t p = 0; p < mask.size(); ++p) {
                if (!mask[p] || label[p] >= 0) continue;
                const std::size_t y = p / w, x = p % w;
                const bool touches = (x > 0 && label[p - 1] == id) || (x + 1 < w && label[p + 1] == id) ||
                                     (y > 0 && label[p - w] == id) || (y + 1 < h && label[p + w] == id);
                if (touches) {
                    label[p] = id;
                    changed = true;
                }
            }
        }
        std::set<std::size_t> members;
        for (std::size_t p = 0; p < mask.size(); ++p) {
            if (label[p] == id) members.insert(p);
        }
        out.push_back(std::move(members));
    }
    return out;
}

}  // namespace

TEST_CASE("rank-1 matrix is recovered at k=1") {
    const Tensor a({2, 2}, {2, 4, 1, 2});
    NmfOptions opts;
    opts.rank = 1;
    opts.max_iters = 2000;
    opts.tol = 0.0;
    const auto model = nmf_factorize(a, opts);
    CHECK(model.error < 1e-3);
    CHECK(model.w.shape() == Shape{2, 1});
    CHECK(model.h.shape() == Shape{1, 2});
}

TEST_CASE("objective never increases and factors stay non-negative") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 5 + rng.below(30), c = 3 + rng.below(10);
        const Tensor a = test::random_tensor({m, c}, rng, 0, 2);
        const std::size_t k = 1 + rng.below(std::min(m, c));
        const auto model = nmf_factorize(a, k, 200, rng.next_u64());
        CAPTURE(trial);
        for (std::size_t i = 1; i < model.objective.size(); ++i) {
            CHECK(model.objective[i] <= model.objective[i - 1]);
        }
        for (float v : model.w.values()) CHECK(v >= 0.0f);
        for (float v : model.h.values()) CHECK(v >= 0.0f);
        CHECK(model.error == doctest::Approx(std::sqrt(model.objective.back())).epsilon(1e-9));
    }
}

TEST_CASE("NMF is deterministic and validates its input") {
    Rng rng(22);
    const Tensor a = test::random_tensor({10, 4}, rng, 0, 1);
    const auto m1 = nmf_factorize(a, 2, 50, 9), m2 = nmf_factorize(a, 2, 50, 9);
    CHECK(m1.w == m2.w);
    CHECK(m1.h == m2.h);
    CHECK_THROWS_AS(nmf_factorize(a, 5, 50, 9), ConfigError);
    CHECK_THROWS_AS(nmf_factorize(Tensor({3, 3}), 1, 50, 9), DataError);

    Tensor neg = a;
    neg[0] = -1.0f;
    CHECK(nmf_factorize(neg, 2, 10, 9).clamped_negatives);
}

TEST_CASE("activation matrix rows are spatial positions") {
    const Tensor act({2, 1, 2}, {1, 3, 2, 0});
    const Tensor a = activation_matrix(std::vector<Tensor>{act, act});
    CHECK(a.shape() == Shape{4, 2});
    CHECK(a.at(0, 0) == 1.0f);
    CHECK(a.at(0, 1) == 2.0f);
    CHECK(a.at(1, 0) == 3.0f);
    CHECK(a.at(1, 1) == 0.0f);
}

TEST_CASE("NCAV rows come from H and are non-negative") {
    Rng rng(23);
    const Tensor a = test::random_tensor({20, 6}, rng, 0, 1);
    const auto model = nmf_factorize(a, 3, 100, 1);
    const auto ncavs = ncavs_from_model(model, 4);
    REQUIRE(ncavs.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(ncavs[k].layer_id == 4);
        CHECK(ncavs[k].component_index == k);
        CHECK(ncavs[k].vector.size() == 6);
        for (float v : ncavs[k].vector) CHECK(v >= 0.0f);
    }
}

TEST_CASE("heatmap hand example and edge cases") {
    const Tensor act({2, 1, 2}, {1, 3, 2, 0});
    Ncav ones{0, {1, 1}, 0};
    const Tensor flat = ncav_heatmap(ones, act);
    CHECK(flat.shape() == Shape{1, 2});
    CHECK(flat[0] == 0.0f);
    CHECK(flat[1] == 0.0f);

    Ncav first{0, {1, 0}, 0};
    const Tensor hot = ncav_heatmap(first, act);
    CHECK(hot[0] == 0.0f);
    CHECK(hot[1] == 1.0f);

    const Tensor zeros = ncav_heatmap(ones, Tensor({2, 3, 3}));
    for (float v : zeros.values()) CHECK(v == 0.0f);
    CHECK_THROWS_AS(ncav_heatmap(ones, Tensor({3, 1, 1})), ShapeError);

    Rng rng(24);
    const Tensor r = test::random_tensor({5, 6, 7}, rng, 0, 3);
    const Ncav any{0, {0.3f, 0.1f, 0.0f, 0.9f, 0.2f}, 0};
    const Tensor heat = ncav_heatmap(any, r);
    for (float v : heat.values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("superpixels: full and empty heatmaps") {
    Rng rng(25);
    const Tensor image = test::random_tensor({3, 12, 10}, rng, 0, 1);
    const auto full = extract_superpixels(image, Tensor::filled({3, 5}, 1.0f));
    REQUIRE(full.size() == 1);
    CHECK(full[0].box == PixelBox{0, 0, 10, 12});
    CHECK(full[0].patch == image);
    CHECK(extract_superpixels(image, Tensor({3, 5})).empty());
}

TEST_CASE("superpixels match a brute-force component labelling") {
    Rng rng(26);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t h = 8 + rng.below(20), w = 8 + rng.below(20);
        const Tensor image = test::random_tensor({3, h, w}, rng, 0, 1);
        Tensor heat({h, w});
        // A few random rectangles, some overlapping.
        const std::size_t blobs = 1 + rng.below(4);
        for (std::size_t b = 0; b < blobs; ++b) {
            const std::size_t y0 = rng.below(h - 2), x0 = rng.below(w - 2);
            const std::size_t y1 = std::min(h, y0 + 2 + rng.below(8)), x1 = std::min(w, x0 + 2 + rng.below(8));
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = x0; x < x1; ++x) heat[y * w + x] = 1.0f;
            }
        }
        std::vector<std::uint8_t> mask(h * w);
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = heat[i] >= 0.5f;
        auto expected = BruteForceComponents(mask, h, w);
        std::erase_if(expected, [](const auto& s) { return s.size() < kMinSuperpixelArea; });

        const auto got = extract_superpixels(image, heat);
        CAPTURE(trial);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            std::set<std::size_t> members;
            const auto& sp = got[i];
            CHECK(sp.mask.shape() == Shape{sp.box.height(), sp.box.width()});
            CHECK(sp.patch.shape() == Shape{3, sp.box.height(), sp.box.width()});
            for (std::size_t y = 0; y < sp.box.height(); ++y) {
                for (std::size_t x = 0; x < sp.box.width(); ++x) {
                    if (sp.mask.at(y, x) > 0.5f) members.insert((sp.box.y0 + y) * w + sp.box.x0 + x);
                }
            }
            CHECK(std::find(expected.begin(), expected.end(), members) != expected.end());
        }
    }
}

TEST_CASE("two disjoint blobs give two superpixels with disjoint boxes") {
    const Tensor image = Tensor::filled({3, 20, 20}, 0.5f);
    Tensor heat({20, 20});
    for (std::size_t y = 1; y < 7; ++y)
        for (std::size_t x = 1; x < 7; ++x) heat[y * 20 + x] = 0.9f;
    for (std::size_t y = 12; y < 19; ++y)
        for (std::size_t x = 10; x < 18; ++x) heat[y * 20 + x] = 0.7f;
    const auto sps = extract_superpixels(image, heat);
    REQUIRE(sps.size() == 2);
    const auto& a = sps[0].box;
    const auto& b = sps[1].box;
    CHECK((a.x1 <= b.x0 || b.x1 <= a.x0 || a.y1 <= b.y0 || b.y1 <= a.y0));
}

TEST_CASE("nearest-neighbour upsampling") {
    const Tensor m({2, 2}, {1, 2, 3, 4});
    const Tensor u = upsample_nearest(m, 4, 4);
    CHECK(u.at(0, 0) == 1.0f);
    CHECK(u.at(1, 1) == 1.0f);
    CHECK(u.at(0, 3) == 2.0f);
    CHECK(u.at(3, 0) == 3.0f);
    CHECK(u.at(3, 3) == 4.0f);
}

TEST_CASE("synthetic samples: one concept, 1 to 5 patches, deterministic") {
    const auto pool = builtin_shape_superpixels(3, 10, 30, 1);
    SynthConfig cfg;
    cfg.width = 160;
    cfg.height = 120;
    cfg.seed = 5;
    const auto a = generate_synthetic_samples(pool, cfg, 6);
    const auto b = generate_synthetic_samples(pool, cfg, 6);
    REQUIRE(a.size() == 18);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].image.shape() == Shape{3, 120, 160});
        CHECK(a[i].placements.size() >= 1);
        CHECK(a[i].placements.size() <= 5);
        CHECK(pool.count(a[i].concept_id) == 1);
        for (const auto& p : a[i].placements) {
            CHECK(p.scale >= 0.9);
            CHECK(p.scale <= 1.1);
            CHECK(p.box.x1 <= 160);
            CHECK(p.box.y1 <= 120);
            CHECK(p.superpixel_index < pool.at(a[i].concept_id).size());
        }
        for (float v : a[i].image.values()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    cfg.seed = 6;
    CHECK(generate_synthetic_samples(pool, cfg, 1)[0].image != a[0].image);
}

TEST_CASE("pasted patches show up in the image") {
    SuperpixelsByConcept pool;
    Superpixel sp;
    sp.patch = Tensor::filled({3, 6, 6}, 0.25f);
    sp.mask = Tensor::filled({6, 6}, 1.0f);
    pool["c"].push_back(sp);
    SynthConfig cfg;
    cfg.width = 40;
    cfg.height = 30;
    cfg.min_scale = cfg.max_scale = 1.0;
    const auto s = generate_synthetic_sample(pool, "c", 0, cfg);
    for (const auto& p : s.placements) {
        CHECK(p.box.width() == 6);
        // The last placement is fully visible.
    }
    const auto& last = s.placements.back().box;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = last.y0; y < last.y1; ++y)
            for (std::size_t x = last.x0; x < last.x1; ++x) CHECK(s.image.at(c, y, x) == 0.25f);
    }
}

TEST_CASE("synthetic config validation") {
    SynthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.min_patches = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.min_patches = 3;
    cfg.max_patches = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    const auto pool = builtin_shape_superpixels(2, 2, 10, 1);
    CHECK_THROWS_AS(generate_synthetic_samples({}, SynthConfig{}, 1), ConfigError);
    SynthConfig tiny;
    tiny.width = 4;
    tiny.height = 4;
    CHECK_THROWS_AS(generate_synthetic_samples(pool, tiny, 1), DataError);
}

TEST_CASE("channel-coded generator") {
    CHECK_THROWS_AS(generate_channel_coded_activations(5, 10, 4, 2, 2, 1.0, 1), ConfigError);
    const auto ds = generate_channel_coded_activations(3, 10, 8, 2, 2, 5.0, 1);
    CHECK(ds.concept_ids() == std::vector<std::string>{"concept0", "concept1", "concept2"});
    for (const auto& [id, samples] : ds.concepts()) {
        for (const auto& t : samples) {
            for (float v : t.values()) CHECK(v >= 0.0f);
        }
    }
}

TEST_CASE("swapping channel codes swaps which channel a CAV relies on") {
    TrainConfig cfg;
    cfg.runs = 2;
    cfg.epochs = 200;
    const std::vector<std::size_t> straight{0, 1}, swapped{1, 0};
    const auto a = generate_channel_coded_activations(2, 40, 4, 2, 2, 5.0, 3, 0, straight);
    const auto b = generate_channel_coded_activations(2, 40, 4, 2, 2, 5.0, 3, 0, swapped);
    const Cav ca = train_cav(a, "concept0", CavMode::OneD, 1, cfg);
    const Cav cb = train_cav(b, "concept0", CavMode::OneD, 1, cfg);
    const auto argmax = [](const std::vector<float>& w) {
        return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    };
    CHECK(argmax(ca.weights) == 0);
    CHECK(argmax(cb.weights) == 1);
}

TEST_CASE("zero signal leaves every mode near chance") {
    std::map<std::size_t, ConceptDataset> layers;
    layers.emplace(0, generate_channel_coded_activations(3, 60, 4, 2, 2, 0.0, 4));
    SweepConfig sweep;
    sweep.layers = {0};
    sweep.sample_counts = {40};
    TrainConfig cfg;
    cfg.runs = 5;
    cfg.epochs = 200;
    const auto result = run_sweep(layers, sweep, cfg);
    for (const auto& r : result.rows) {
        CHECK(r.f1 > 0.3);
        CHECK(r.f1 < 0.7);
    }
}
