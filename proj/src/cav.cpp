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

#include "csk/cav.hpp"

#include <algorithm>
#include <cmath>

#include "csk/error.hpp"
#include "csk/parallel.hpp"
#include "csk/rng.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

// ---- ConceptDataset -------------------------------------------------------

void
ConceptDataset::add(const std::string& concept_id, Tensor act) {
    act.require_rank(3, "concept sample");
    if (layer_shape_.empty()) {
        layer_shape_ = act.shape();
    } else if (act.shape() != layer_shape_) {
        throw ShapeError("concept sample shape " + shape_to_string(act.shape()) + " differs from layer shape " +
                         shape_to_string(layer_shape_));
    }
    concepts_[concept_id].push_back(std::move(act));
}

std::vector<std::string>
ConceptDataset::concept_ids() const {
    std::vector<std::string> ids;
    ids.reserve(concepts_.size());
    for (const auto& [id, _] : concepts_) {
        ids.push_back(id);
    }
    return ids;
}

const std::vector<Tensor>&
ConceptDataset::samples(const std::string& concept_id) const {
    auto it = concepts_.find(concept_id);
    if (it == concepts_.end()) {
        throw DataError("unknown concept '" + concept_id + "'");
    }
    return it->second;
}

std::size_t
ConceptDataset::total_samples() const {
    std::size_t n = 0;
    for (const auto& [_, v] : concepts_) {
        n += v.size();
    }
    return n;
}

void
ConceptDataset::validate() const {
    if (concepts_.empty()) {
        throw DataError("concept dataset is empty");
    }
    for (const auto& [id, v] : concepts_) {
        if (v.size() < 2) {
            throw DataError("concept '" + id + "' has " + std::to_string(v.size()) + " samples, need at least 2");
        }
    }
}

void
TrainConfig::validate() const {
    if (runs < 2) throw ConfigError("runs must be at least 2, got " + std::to_string(runs));
    if (!(train_fraction > 0.0 && train_fraction < 1.0) || !(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("train/validation fractions must lie in (0,1)");
    }
    if (std::abs(train_fraction + val_fraction - 1.0) > 1e-9) {
        throw ConfigError("train and validation fractions must sum to 1");
    }
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (l2 < 0.0) throw ConfigError("l2 weight must be non-negative");
    if (train_samples && *train_samples < 2) throw ConfigError("train_samples must be at least 2");
}

Shape
Cav::weight_shape() const {
    if (layer_shape.size() != 3) {
        return {weights.size()};
    }
    switch (mode) {
        case CavMode::OneD:
            return {layer_shape[0], 1, 1};
        case CavMode::TwoD:
            return {1, layer_shape[1], layer_shape[2]};
        case CavMode::ThreeD:
            return layer_shape;
    }
    return {weights.size()};
}

// ---- splitting --------------------------------------------------------------

RunSplit
make_run_split(const ConceptDataset& ds, const std::string& concept_id, const TrainConfig& cfg,
               std::uint64_t run_seed) {
    const auto& positives = ds.samples(concept_id);
    std::vector<SampleRef> pos;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        pos.push_back({concept_id, i});
    }
    std::vector<SampleRef> neg;
    for (const auto& [id, samples] : ds.concepts()) {
        if (id == concept_id) continue;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            neg.push_back({id, i});
        }
    }
    if (neg.empty()) {
        throw NoNegativesError(concept_id);
    }

    Rng rng(derive_seed(run_seed, "split"));
    rng.shuffle(std::span<SampleRef>(pos));
    rng.shuffle(std::span<SampleRef>(neg));

    auto val_count = [&](std::size_t n) {
        auto v = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.val_fraction));
        return std::clamp<std::size_t>(v, 1, n - 1);
    };
    if (pos.size() < 3) {
        throw DataError("concept '" + concept_id + "' needs at least 3 samples for a train/validation split");
    }
    if (neg.size() < 2) {
        throw DataError("concept '" + concept_id + "' has fewer than 2 negative samples");
    }
    const std::size_t pos_val = val_count(pos.size());
    const std::size_t neg_val = val_count(neg.size());

    RunSplit split;
    split.val_pos.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(pos_val));
    split.train_pos.assign(pos.begin() + static_cast<std::ptrdiff_t>(pos_val), pos.end());
    split.val_neg.assign(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(neg_val));
    split.train_neg.assign(neg.begin() + static_cast<std::ptrdiff_t>(neg_val), neg.end());

    if (cfg.train_samples) {
        if (*cfg.train_samples > split.train_pos.size()) {
            throw DataError("concept '" + concept_id + "' has " + std::to_string(split.train_pos.size()) +
                            " training samples, " + std::to_string(*cfg.train_samples) + " requested");
        }
        split.train_pos.resize(*cfg.train_samples);
    }
    if (split.train_pos.size() < 2) {
        throw DataError("concept '" + concept_id + "' has fewer than 2 training samples");
    }

    // Balance each part by downsampling the larger class. The lists are
    // already shuffled, so truncation is a uniform subsample.
    auto balance = [](std::vector<SampleRef>& a, std::vector<SampleRef>& b) {
        const std::size_t n = std::min(a.size(), b.size());
        a.resize(n);
        b.resize(n);
    };
    balance(split.train_pos, split.train_neg);
    balance(split.val_pos, split.val_neg);
    return split;
}

// ---- training ---------------------------------------------------------------

namespace {

double
Sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    std::vector<double> labels;

    const double* row(std::size_t i) const { return values.data() + i * cols; }
};

void
AppendRows(DesignMatrix& m, const ConceptDataset& ds, std::span<const SampleRef> refs, CavMode mode, double label) {
    for (const auto& ref : refs) {
        auto f = aggregate_features(mode, ds.samples(ref.concept_id)[ref.index]);
        if (m.cols == 0) m.cols = f.size();
        m.values.insert(m.values.end(), f.begin(), f.end());
        m.labels.push_back(label);
        ++m.rows;
    }
}

}  // namespace

double
cav_logit_features(const Cav& cav, std::span<const double> features) {
    if (features.size() != cav.weights.size()) {
        throw ShapeError("CAV expects " + std::to_string(cav.weights.size()) + " features, got " +
                         std::to_string(features.size()));
    }
    double z = cav.bias;
    for (std::size_t j = 0; j < features.size(); ++j) {
        z += static_cast<double>(cav.weights[j]) * (features[j] - static_cast<double>(cav.feature_mean[j])) /
             static_cast<double>(cav.feature_scale[j]);
    }
    return z;
}

float
cav_inference_features(const Cav& cav, std::span<const double> features) {
    return static_cast<float>(Sigmoid(cav_logit_features(cav, features)));
}

float
cav_inference(const Cav& cav, const Tensor& act) {
    if (act.shape() != cav.layer_shape) {
        throw ShapeError("CAV trained on layer shape " + shape_to_string(cav.layer_shape) + ", got activation " +
                         shape_to_string(act.shape()));
    }
    return cav_inference_features(cav, aggregate_features(cav.mode, act));
}

double
f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double
evaluate_f1(const Cav& cav, const ConceptDataset& ds, std::span<const SampleRef> positives,
            std::span<const SampleRef> negatives) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& ref : positives) {
        // Presence iff the logit is positive, i.e. sigmoid > 0.5.
        if (cav_logit_features(cav, aggregate_features(cav.mode, ds.samples(ref.concept_id)[ref.index])) > 0.0) {
            ++tp;
        } else {
            ++fn;
        }
    }
    for (const auto& ref : negatives) {
        if (cav_logit_features(cav, aggregate_features(cav.mode, ds.samples(ref.concept_id)[ref.index])) > 0.0) {
            ++fp;
        }
    }
    return f1_score(tp, fp, fn);
}

Cav
train_cav(const ConceptDataset& ds, const std::string& concept_id, CavMode mode, std::uint64_t run_seed,
          const TrainConfig& cfg) {
    if (!ds.contains(concept_id)) {
        throw DataError("unknown concept '" + concept_id + "'");
    }
    if (ds.concepts().size() < 2) {
        throw NoNegativesError(concept_id);
    }
    RunSplit split = make_run_split(ds, concept_id, cfg, run_seed);

    DesignMatrix x;
    AppendRows(x, ds, split.train_pos, mode, 1.0);
    AppendRows(x, ds, split.train_neg, mode, 0.0);
    const std::size_t n = x.rows, d = x.cols;

    // Per-feature standardization from the training part.
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += x.row(i)[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.row(i)[j] - mean[j];
            scale[j] += c * c;
        }
    }
    std::size_t degenerate = 0;
    for (double& s : scale) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 1e-12)) {
            s = 1.0;
            ++degenerate;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* r = x.values.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - mean[j]) / scale[j];
    }

    Rng init_rng(derive_seed(run_seed, "init"));
    std::vector<double> w(d);
    for (double& v : w) v = init_rng.uniform(-cfg.init_scale, cfg.init_scale);
    double b = 0.0;

    // Full-batch gradient descent on mean binary cross-entropy + (l2/2)|w|^2.
    const auto& k = simd::active();
    std::vector<double> grad(d);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double err = Sigmoid(b + k.dot_f64(w.data(), x.row(i), d)) - x.labels[i];
            k.axpy_f64(err * inv_n, x.row(i), grad.data(), d);
            grad_b += err * inv_n;
        }
        k.axpy_f64(cfg.l2, w.data(), grad.data(), d);
        k.axpy_f64(-cfg.learning_rate, grad.data(), w.data(), d);
        b -= cfg.learning_rate * grad_b;
    }

    Cav cav;
    cav.concept_id = concept_id;
    cav.layer_id = ds.layer_id();
    cav.mode = mode;
    cav.layer_shape = ds.layer_shape();
    cav.weights.assign(w.begin(), w.end());
    cav.bias = static_cast<float>(b);
    cav.feature_mean.assign(mean.begin(), mean.end());
    cav.feature_scale.assign(scale.begin(), scale.end());
    cav.run_seed = run_seed;
    bool finite = std::isfinite(b);
    for (double v : w) finite = finite && std::isfinite(v);
    cav.convergence_warning = degenerate == d || !finite;
    cav.split = std::move(split);
    cav.train_f1 = static_cast<float>(evaluate_f1(cav, ds, cav.split.val_pos, cav.split.val_neg));
    return cav;
}

std::vector<Cav>
train_ensemble(const ConceptDataset& ds, const std::string& concept_id, CavMode mode, const TrainConfig& cfg,
               std::size_t jobs) {
    cfg.validate();
    std::vector<Cav> cavs(cfg.runs);
    parallel_for(cfg.runs, jobs,
                 [&](std::size_t i) { cavs[i] = train_cav(ds, concept_id, mode, cfg.base_seed + i, cfg); });
    return cavs;
}

}  // namespace csk
