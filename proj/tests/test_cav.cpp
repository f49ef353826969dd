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

#include "csk/cav.hpp"
#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/stability.hpp"
#include "test_util.hpp"

using namespace csk;

namespace {

ConceptDataset
Separable(std::size_t samples = 40, std::uint64_t seed = 1) {
    return generate_channel_coded_activations(2, samples, 4, 3, 3, 5.0, seed);
}

TrainConfig
Quick(std::size_t runs = 2) {
    TrainConfig cfg;
    cfg.runs = runs;
    cfg.epochs = 200;
    return cfg;
}

}  // namespace

TEST_CASE("dataset rejects mismatched shapes and needs two samples") {
    ConceptDataset ds(3);
    ds.add("a", Tensor({2, 2, 2}));
    CHECK_THROWS_AS(ds.add("a", Tensor({2, 2, 3})), ShapeError);
    CHECK_THROWS_AS(ds.add("b", Tensor({8})), ShapeError);
    CHECK_THROWS_AS(ds.validate(), DataError);
    ds.add("a", Tensor({2, 2, 2}));
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.layer_id() == 3);
    CHECK(ds.total_samples() == 2);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.runs = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.runs = 15;
    cfg.train_fraction = 0.7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.train_fraction = 1.0;
    cfg.val_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("splits are disjoint, balanced and cover the positives") {
    const auto ds = generate_channel_coded_activations(3, 30, 4, 2, 2, 3.0, 2);
    const TrainConfig cfg;
    const RunSplit s = make_run_split(ds, "concept1", cfg, 77);
    CHECK(s.train_pos.size() + s.val_pos.size() == 30);
    CHECK(s.val_pos.size() == 6);
    CHECK(s.train_neg.size() == s.train_pos.size());
    CHECK(s.val_neg.size() == s.val_pos.size());
    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto* part : {&s.train_pos, &s.train_neg, &s.val_pos, &s.val_neg}) {
        for (const auto& r : *part) CHECK(seen.insert({r.concept_id, r.index}).second);
    }
    for (const auto& r : s.train_pos) CHECK(r.concept_id == "concept1");
    for (const auto& r : s.train_neg) CHECK(r.concept_id != "concept1");

    TrainConfig limited = cfg;
    limited.train_samples = 10;
    const RunSplit l = make_run_split(ds, "concept1", limited, 77);
    CHECK(l.train_pos.size() == 10);
    CHECK(l.train_neg.size() == 10);
    CHECK(l.val_pos.size() == 6);
}

TEST_CASE("weights have the mode's flattened length") {
    const auto ds = Separable(20);
    for (CavMode mode : kAllModes) {
        const Cav cav = train_cav(ds, "concept0", mode, 3, Quick());
        CHECK(cav.weights.size() == mode_feature_length(mode, ds.layer_shape()));
        CHECK(shape_volume(cav.weight_shape()) == cav.weights.size());
        CHECK(std::any_of(cav.weights.begin(), cav.weights.end(), [](float w) { return w != 0.0f; }));
    }
}

TEST_CASE("separable 1D data gives perfect validation F1") {
    const auto ds = Separable();
    const Cav cav = train_cav(ds, "concept0", CavMode::OneD, 4, Quick());
    CHECK(evaluate_f1(cav, ds, cav.split.val_pos, cav.split.val_neg) == 1.0);
    // A held-out positive scores above one half.
    const auto& v = cav.split.val_pos.front();
    CHECK(cav_inference(cav, ds.samples(v.concept_id)[v.index]) > 0.5f);
}

TEST_CASE("indistinguishable classes sit near chance") {
    Rng rng(5);
    ConceptDataset ds;
    double total = 0.0;
    for (int i = 0; i < 200; ++i) {
        ds.add("a", test::random_tensor({4, 2, 2}, rng));
        ds.add("b", test::random_tensor({4, 2, 2}, rng));
    }
    TrainConfig cfg = Quick(10);
    const auto cavs = train_ensemble(ds, "a", CavMode::ThreeD, cfg);
    for (const auto& c : cavs) total += evaluate_f1(c, ds, c.split.val_pos, c.split.val_neg);
    const double f1 = total / static_cast<double>(cavs.size());
    CHECK(f1 > 0.35);
    CHECK(f1 < 0.65);
}

TEST_CASE("single concept has no negatives") {
    ConceptDataset ds;
    Rng rng(6);
    for (int i = 0; i < 5; ++i) ds.add("only", test::random_tensor({2, 2, 2}, rng));
    CHECK_THROWS_AS(train_cav(ds, "only", CavMode::OneD, 1, Quick()), NoNegativesError);
    CHECK_THROWS_AS(train_cav(ds, "absent", CavMode::OneD, 1, Quick()), DataError);
}

TEST_CASE("identical features raise the convergence warning") {
    ConceptDataset ds;
    for (int i = 0; i < 10; ++i) {
        ds.add("a", Tensor::filled({2, 2, 2}, 1.0f));
        ds.add("b", Tensor::filled({2, 2, 2}, 1.0f));
    }
    const Cav cav = train_cav(ds, "a", CavMode::OneD, 1, Quick());
    CHECK(cav.convergence_warning);
}

TEST_CASE("training is deterministic per seed") {
    const auto ds = Separable(20);
    const Cav a = train_cav(ds, "concept1", CavMode::TwoD, 9, Quick());
    const Cav b = train_cav(ds, "concept1", CavMode::TwoD, 9, Quick());
    const Cav c = train_cav(ds, "concept1", CavMode::TwoD, 10, Quick());
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.weights != c.weights);
}

TEST_CASE("ensemble seeds are base_seed + i and parallel runs match serial") {
    const auto ds = Separable(20);
    TrainConfig cfg = Quick(4);
    cfg.base_seed = 100;
    const auto serial = train_ensemble(ds, "concept0", CavMode::OneD, cfg, 1);
    const auto parallel = train_ensemble(ds, "concept0", CavMode::OneD, cfg, 3);
    REQUIRE(serial.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(serial[i].run_seed == 100 + i);
        CHECK(serial[i].weights == parallel[i].weights);
    }
}

TEST_CASE("two runs on separable data agree in direction") {
    const auto ds = Separable();
    const auto cavs = train_ensemble(ds, "concept0", CavMode::OneD, Quick(2));
    for (const auto& c : cavs) CHECK(evaluate_f1(c, ds, c.split.val_pos, c.split.val_neg) == 1.0);
    CHECK(cosine_similarity(cavs[0].weights, cavs[1].weights) > 0.0);
}

TEST_CASE("inference on raw activations equals inference on pre-aggregated features") {
    const auto ds = Separable(20);
    Rng rng(11);
    for (CavMode mode : kAllModes) {
        const Cav cav = train_cav(ds, "concept0", mode, 2, Quick());
        for (int i = 0; i < 10; ++i) {
            const Tensor act = test::random_tensor(ds.layer_shape(), rng, 0, 5);
            CHECK(cav_inference(cav, act) == cav_inference_features(cav, aggregate_features(mode, act)));
        }
    }
}

TEST_CASE("zero weights and bias score one half") {
    Cav cav;
    cav.mode = CavMode::OneD;
    cav.layer_shape = {3, 2, 2};
    cav.weights.assign(3, 0.0f);
    cav.feature_mean.assign(3, 0.0f);
    cav.feature_scale.assign(3, 1.0f);
    CHECK(cav_inference(cav, Tensor({3, 2, 2})) == 0.5f);
    CHECK_THROWS_AS(cav_inference(cav, Tensor({4, 2, 2})), ShapeError);
}

TEST_CASE("F1 edge cases") {
    CHECK(f1_score(8, 2, 2) == doctest::Approx(0.8));
    CHECK(f1_score(5, 0, 0) == 1.0);
    CHECK(f1_score(0, 3, 4) == 0.0);
    CHECK(f1_score(0, 0, 0) == 0.0);
}

TEST_CASE(".cav files round trip") {
    const auto ds = Separable(20);
    const Cav cav = train_cav(ds, "concept0", CavMode::ThreeD, 5, Quick());
    test::TempDir dir("cav");
    write_cav(dir / "x/run.cav", cav);
    const Cav back = read_cav(dir / "x/run.cav");
    CHECK(back.concept_id == cav.concept_id);
    CHECK(back.layer_id == cav.layer_id);
    CHECK(back.mode == cav.mode);
    CHECK(back.layer_shape == cav.layer_shape);
    CHECK(back.weights == cav.weights);
    CHECK(back.bias == cav.bias);
    CHECK(back.feature_mean == cav.feature_mean);
    CHECK(back.feature_scale == cav.feature_scale);
    CHECK(back.run_seed == cav.run_seed);
    CHECK(back.train_f1 == cav.train_f1);

    auto bytes = encode_cav(cav);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_cav(bytes), DataError);
    bytes = encode_cav(cav);
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_cav(bytes), DataError);
}
