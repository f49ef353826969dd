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

#include <cmath>

#include <doctest.h>

#include "csk/attribution.hpp"
#include "csk/error.hpp"
#include "test_util.hpp"

using namespace csk;

namespace {

Cav
MakeCav(CavMode mode, Shape layer, std::vector<float> w) {
    Cav c;
    c.mode = mode;
    c.layer_shape = std::move(layer);
    c.weights = std::move(w);
    c.bias = 7.0f;  // must not leak into attributions
    return c;
}

AttributionRecord
Rec(std::string pred, double g, double sg, std::size_t run = 0) {
    AttributionRecord r;
    r.prediction_id = std::move(pred);
    r.concept_id = "c";
    r.run = run;
    r.attr_grad = g;
    r.attr_sg = sg;
    return r;
}

}  // namespace

TEST_CASE("attribution hand example") {
    // Channel 0 has mean gradient 1, channel 1 mean 3; the CAV looks only at
    // channel 0.
    const Tensor grad({2, 2, 1}, {0.5f, 1.5f, 2.0f, 4.0f});
    CHECK(attribute(MakeCav(CavMode::OneD, {2, 2, 1}, {1, 0}), grad) == 1.0);
    CHECK(attribute(MakeCav(CavMode::OneD, {2, 2, 1}, {0.5f, 1}), grad) == 3.5);
    // 2D: mean over channels per position is [1.25, 2.75].
    CHECK(attribute(MakeCav(CavMode::TwoD, {2, 2, 1}, {2, 0}), grad) == 2.5);
    CHECK(attribute(MakeCav(CavMode::ThreeD, {2, 2, 1}, {1, 1, 1, 1}), grad) == 8.0);
    CHECK_THROWS_AS(attribute(MakeCav(CavMode::OneD, {2, 1, 2}, {1, 0}), grad), ShapeError);
}

TEST_CASE("attribution is linear in the gradient") {
    Rng rng(31);
    for (CavMode mode : kAllModes) {
        const Shape shape{4, 3, 5};
        const Tensor g1 = test::random_tensor(shape, rng), g2 = test::random_tensor(shape, rng);
        std::vector<float> w(mode_feature_length(mode, shape));
        for (float& v : w) v = static_cast<float>(rng.uniform(-1, 1));
        const Cav cav = MakeCav(mode, shape, w);
        Tensor sum = g1;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = g1[i] + 2.0f * g2[i];
        // The float sum is exact up to rounding of the combined entries.
        CHECK(attribute(cav, sum) ==
              doctest::Approx(attribute(cav, g1) + 2.0 * attribute(cav, g2)).epsilon(1e-5));
    }
}

TEST_CASE("CAD hand example is exactly 25 percent") {
    const std::vector<AttributionRecord> recs{Rec("p", 2, 1), Rec("p", -2, -1), Rec("p", 4, 4)};
    const auto v = cad(recs);
    REQUIRE(v.has_value());
    CHECK(*v == 0.25);
    const std::vector<AttributionRecord> zero{Rec("p", 0, 1), Rec("p", 0, -3)};
    CHECK_FALSE(cad(zero).has_value());
}

TEST_CASE("sign confusion hand example") {
    const std::vector<AttributionRecord> recs{Rec("a", 1, 2), Rec("b", -1, -0.5), Rec("c", 1, -1),
                                              Rec("d", -2, 3)};
    const auto c = sign_confusion(recs);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.acc() == 0.5);
}

TEST_CASE("a zero attribution counts as positive") {
    const std::vector<AttributionRecord> recs{Rec("a", 0, 0), Rec("b", 0, -1), Rec("c", -1, 0)};
    const auto c = sign_confusion(recs);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 0);
    CHECK_THROWS_AS(sign_confusion(std::vector<AttributionRecord>{}), DataError);
}

TEST_CASE("identical attributions give full accuracy and zero CAD") {
    Rng rng(32);
    std::vector<AttributionRecord> recs;
    for (int p = 0; p < 10; ++p) {
        for (std::size_t run = 0; run < 3; ++run) {
            const double v = rng.uniform(-1, 1);
            recs.push_back(Rec("p" + std::to_string(p), v, v, run));
        }
    }
    const auto s = summarize_grad_stability(recs);
    CHECK(s.confusion.acc() == 1.0);
    CHECK(s.cad_percent == 0.0);
    CHECK(s.predictions == 10);
    CHECK(s.skipped == 0);
}

TEST_CASE("summary averages CAD per prediction and skips undefined ones") {
    const std::vector<AttributionRecord> recs{Rec("a", 2, 1), Rec("a", -2, -1), Rec("a", 4, 4),  // 25%
                                              Rec("b", 1, 1.5),                                  // 50%
                                              Rec("z", 0, 1)};                                   // undefined
    const auto s = summarize_grad_stability(recs);
    CHECK(s.predictions == 3);
    CHECK(s.skipped == 1);
    CHECK(s.cad_percent == doctest::Approx(37.5));
    CHECK(s.confusion.total() == 5);

    std::vector<AttributionRecord> mixed = recs;
    mixed[1].layer_id = 2;
    CHECK_THROWS_AS(summarize_grad_stability(mixed), DataError);
}

TEST_CASE("zero noise SmoothGrad is the vanilla gradient") {
    const RefNet net(RefNetConfig{});
    Rng rng(33);
    const Tensor x = test::random_tensor({3, 12, 12}, rng, 0, 1);
    SmoothGradConfig cfg;
    cfg.noise_fraction = 0.0;
    for (std::size_t t = 0; t < net.num_blocks(); ++t) {
        CHECK(smoothgrad_gradient(net, x, LayerTap{t}, 1, cfg) == net.grad_at_tap(x, LayerTap{t}, 1));
    }
    // A constant image has zero range, so the noise vanishes too.
    cfg.noise_fraction = 0.1;
    const Tensor flat = Tensor::filled({3, 8, 8}, 0.3f);
    CHECK(smoothgrad_gradient(net, flat, LayerTap{0}, 0, cfg) == net.grad_at_tap(flat, LayerTap{0}, 0));
}

TEST_CASE("SmoothGrad is seeded and differs from the clean gradient") {
    const RefNet net(RefNetConfig{});
    Rng rng(34);
    const Tensor x = test::random_tensor({3, 10, 10}, rng, 0, 1);
    SmoothGradConfig cfg;
    cfg.copies = 8;
    cfg.seed = 5;
    const Tensor a = smoothgrad_gradient(net, x, LayerTap{0}, 2, cfg);
    CHECK(a == smoothgrad_gradient(net, x, LayerTap{0}, 2, cfg));
    CHECK(a != net.grad_at_tap(x, LayerTap{0}, 2));
    CHECK(a.shape() == net.tap_shape(LayerTap{0}, 10, 10));
    cfg.seed = 6;
    CHECK(a != smoothgrad_gradient(net, x, LayerTap{0}, 2, cfg));
    cfg.copies = 0;
    CHECK_THROWS_AS(smoothgrad_gradient(net, x, LayerTap{0}, 2, cfg), ConfigError);
}
