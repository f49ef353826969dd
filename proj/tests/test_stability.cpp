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

#include <doctest.h>

#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/stability.hpp"
#include "test_util.hpp"

using namespace csk;

namespace {

Cav
WithWeights(std::vector<float> w) {
    Cav c;
    c.mode = CavMode::OneD;
    c.weights = std::move(w);
    return c;
}

TrainConfig
Quick(std::size_t runs) {
    TrainConfig cfg;
    cfg.runs = runs;
    cfg.epochs = 200;
    return cfg;
}

}  // namespace

TEST_CASE("consistency of the three hand vectors") {
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<Cav> cavs{WithWeights({1, 0}), WithWeights({0, 1}),
                                WithWeights({static_cast<float>(r), static_cast<float>(r)})};
    // Pairwise cosines 0, 1/sqrt(2), 1/sqrt(2).
    CHECK(consistency(cavs) == doctest::Approx(0.47140).epsilon(1e-4));
}

TEST_CASE("consistency trivial cases") {
    const std::vector<Cav> same{WithWeights({1, 2, 3}), WithWeights({1, 2, 3}), WithWeights({1, 2, 3})};
    CHECK(consistency(same) == doctest::Approx(1.0));
    const std::vector<Cav> opposite{WithWeights({1, -2}), WithWeights({-1, 2})};
    CHECK(consistency(opposite) == doctest::Approx(-1.0));
    const std::vector<Cav> zero{WithWeights({1, 0}), WithWeights({0, 0})};
    CHECK_THROWS_AS(consistency(zero), UndefinedCosineError);
    const std::vector<Cav> one{WithWeights({1, 0})};
    CHECK_THROWS_AS(consistency(one), DataError);
}

TEST_CASE("consistency is permutation and scale invariant") {
    Rng rng(3);
    std::vector<Cav> cavs;
    for (int i = 0; i < 6; ++i) {
        std::vector<float> w(5);
        for (float& v : w) v = static_cast<float>(rng.uniform(-1, 1));
        cavs.push_back(WithWeights(w));
    }
    const double base = consistency(cavs);
    std::vector<Cav> shuffled = cavs;
    rng.shuffle(std::span<Cav>(shuffled));
    CHECK(consistency(shuffled) == doctest::Approx(base).epsilon(1e-12));
    std::vector<Cav> scaled = cavs;
    for (auto& c : scaled) {
        const float k = static_cast<float>(rng.uniform(0.1, 10.0));
        for (float& v : c.weights) v *= k;
    }
    CHECK(consistency(scaled) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("stability score is the product") {
    CHECK(stability_score(0.5, 0.8) == doctest::Approx(0.4));
    CHECK(stability_score(1.0, 0.37) == doctest::Approx(0.37));
    // Rounded to three decimals, as in the text tables.
    CHECK(std::round(stability_score(0.977, 0.749) * 1000.0) / 1000.0 == doctest::Approx(0.732));
}

TEST_CASE("separability averages per-run validation F1") {
    // Eight positives and eight negatives in a 1-channel layer. The CAV
    // predicts positive when the feature exceeds zero.
    ConceptDataset ds;
    for (int i = 0; i < 10; ++i) ds.add("pos", Tensor::filled({1, 1, 1}, i < 8 ? 1.0f : -1.0f));
    for (int i = 0; i < 10; ++i) ds.add("neg", Tensor::filled({1, 1, 1}, i < 2 ? 1.0f : -1.0f));
    Cav cav;
    cav.concept_id = "pos";
    cav.mode = CavMode::OneD;
    cav.layer_shape = {1, 1, 1};
    cav.weights = {1.0f};
    cav.feature_mean = {0.0f};
    cav.feature_scale = {1.0f};
    for (std::size_t i = 0; i < 10; ++i) {
        cav.split.val_pos.push_back({"pos", i});
        cav.split.val_neg.push_back({"neg", i});
    }
    // TP 8, FN 2, FP 2.
    const std::vector<Cav> two{cav, cav};
    CHECK(separability(two, ds) == doctest::Approx(0.8));

    // All-negative predictor: F1 with TP = 0 is 0.
    Cav never = cav;
    never.bias = -100.0f;
    const std::vector<Cav> none{never, never};
    CHECK(separability(none, ds) == 0.0);

    Cav empty = cav;
    empty.split.val_pos.clear();
    empty.split.val_neg.clear();
    const std::vector<Cav> bad{empty, empty};
    CHECK_THROWS_AS(separability(bad, ds), DataError);
}

TEST_CASE("separability is permutation invariant") {
    const auto ds = generate_channel_coded_activations(3, 20, 4, 2, 2, 1.0, 4);
    auto cavs = train_ensemble(ds, "concept2", CavMode::ThreeD, Quick(5));
    const double base = separability(cavs, ds);
    std::reverse(cavs.begin(), cavs.end());
    CHECK(separability(cavs, ds) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("sweep rows obey the product identity and are sorted") {
    std::map<std::size_t, ConceptDataset> layers;
    layers.emplace(0, generate_channel_coded_activations(3, 30, 6, 3, 3, 4.0, 5, 0));
    layers.emplace(2, generate_channel_coded_activations(3, 30, 6, 3, 3, 4.0, 5, 2));
    SweepConfig sweep;
    sweep.layers = {0, 1, 2};
    sweep.sample_counts = {10, 20};
    const auto result = run_sweep(layers, sweep, Quick(3), 2);
    CHECK(result.rows.size() == 3 * 2 * 3 * 2);
    for (const auto& r : result.rows) {
        CHECK(std::abs(r.s - r.f1 * r.cos) <= 1e-6);
        CHECK(r.f1 >= 0.0);
        CHECK(r.f1 <= 1.0);
        CHECK(r.cos >= -1.0);
        CHECK(r.cos <= 1.0);
    }
    CHECK(std::is_sorted(result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.concept_id, a.layer_id, a.mode, a.sample_count) <
               std::tie(b.concept_id, b.layer_id, b.mode, b.sample_count);
    }));
    // The missing layer is recorded, not fatal.
    REQUIRE_FALSE(result.errors.empty());
    for (const auto& e : result.errors) CHECK(e.layer_id == 1);

    const auto again = run_sweep(layers, sweep, Quick(3), 1);
    REQUIRE(again.rows.size() == result.rows.size());
    for (std::size_t i = 0; i < again.rows.size(); ++i) {
        CHECK(again.rows[i].cos == result.rows[i].cos);
        CHECK(again.rows[i].f1 == result.rows[i].f1);
    }
}

TEST_CASE("sweep over a single concept fails each cell with no negatives") {
    std::map<std::size_t, ConceptDataset> layers;
    layers.emplace(0, generate_channel_coded_activations(1, 20, 2, 2, 2, 1.0, 6));
    SweepConfig sweep;
    sweep.layers = {0};
    sweep.modes = {CavMode::OneD};
    sweep.sample_counts = {10};
    const auto result = run_sweep(layers, sweep, Quick(2));
    CHECK(result.rows.empty());
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].message.find("no negatives") != std::string::npos);
}

TEST_CASE("channel-coded data favours 1D over 2D") {
    std::map<std::size_t, ConceptDataset> layers;
    layers.emplace(0, generate_channel_coded_activations(3, 60, 8, 4, 4, 5.0, 7));
    SweepConfig sweep;
    sweep.layers = {0};
    sweep.modes = {CavMode::OneD, CavMode::TwoD};
    sweep.sample_counts = {40};
    const auto result = run_sweep(layers, sweep, Quick(5));
    double s1 = 0, s2 = 0;
    for (const auto& r : result.rows) (r.mode == CavMode::OneD ? s1 : s2) += r.s;
    CHECK(s1 > s2);
}

TEST_CASE("sweep config validation") {
    SweepConfig sweep;
    CHECK_THROWS_AS(sweep.validate(), ConfigError);
    sweep.layers = {0};
    CHECK_NOTHROW(sweep.validate());
    sweep.sample_counts = {};
    CHECK_THROWS_AS(sweep.validate(), ConfigError);
}
