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

#include <spdlog/spdlog.h>

#include "csk/error.hpp"
#include "csk/mining.hpp"
#include "csk/rng.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

namespace {

// Dense row-major f64 matrix, just enough for the updates below.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    double* row(std::size_t i) { return v.data() + i * cols; }
    const double* row(std::size_t i) const { return v.data() + i * cols; }
    double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

// out = a * b
Mat
Multiply(const Mat& a, const Mat& b) {
    const auto& k = simd::active();
    Mat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t p = 0; p < a.cols; ++p) {
            const double s = a(i, p);
            if (s != 0.0) k.axpy_f64(s, b.row(p), out.row(i), b.cols);
        }
    }
    return out;
}

// out = a^T * b
Mat
MultiplyTransA(const Mat& a, const Mat& b) {
    const auto& k = simd::active();
    Mat out(a.cols, b.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double s = a(r, i);
            if (s != 0.0) k.axpy_f64(s, b.row(r), out.row(i), b.cols);
        }
    }
    return out;
}

// out = a * b^T
Mat
MultiplyTransB(const Mat& a, const Mat& b) {
    const auto& k = simd::active();
    Mat out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.rows; ++j) {
            out(i, j) = k.dot_f64(a.row(i), b.row(j), a.cols);
        }
    }
    return out;
}

double
SquaredResidual(const Mat& a, const Mat& w, const Mat& h) {
    const Mat wh = Multiply(w, h);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        const double d = a.v[i] - wh.v[i];
        acc += d * d;
    }
    return acc;
}

// x <- x * num / den, entries with den == 0 are left unchanged.
void
MultiplicativeStep(Mat& x, const Mat& num, const Mat& den) {
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        if (den.v[i] > 0.0) {
            x.v[i] *= num.v[i] / den.v[i];
        }
    }
}

Tensor
ToTensor(const Mat& m) {
    return Tensor({m.rows, m.cols}, std::vector<float>(m.v.begin(), m.v.end()));
}

}  // namespace

NmfModel
nmf_factorize(const Tensor& a_in, const NmfOptions& opts) {
    a_in.require_rank(2, "nmf_factorize");
    const std::size_t m = a_in.dim(0), c = a_in.dim(1), k = opts.rank;
    if (k == 0 || k > std::min(m, c)) {
        throw ConfigError("nmf: rank " + std::to_string(k) + " must lie in 1..min(M,C) = " +
                          std::to_string(std::min(m, c)));
    }

    NmfModel model;
    model.rank = k;
    Mat a(m, c);
    double total = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        double v = a_in[i];
        if (v < 0.0) {
            v = 0.0;
            model.clamped_negatives = true;
        }
        a.v[i] = v;
        total += v;
    }
    if (model.clamped_negatives) {
        spdlog::warn("nmf: negative activations clamped to 0");
    }
    if (!(total > 0.0)) {
        throw DataError("nmf: input matrix is all zero");
    }

    Rng rng(opts.seed);
    const double init_scale = std::sqrt(total / static_cast<double>(m * c) / static_cast<double>(k));
    Mat w(m, k), h(k, c);
    for (double& v : w.v) v = rng.uniform() * init_scale;
    for (double& v : h.v) v = rng.uniform() * init_scale;

    double obj = SquaredResidual(a, w, h);
    model.objective.push_back(obj);
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        // H <- H * (W^T A) / (W^T W H)
        {
            const Mat num = MultiplyTransA(w, a);
            const Mat den = Multiply(MultiplyTransA(w, w), h);
            MultiplicativeStep(h, num, den);
        }
        // W <- W * (A H^T) / (W H H^T)
        {
            const Mat num = MultiplyTransB(a, h);
            const Mat den = Multiply(w, MultiplyTransB(h, h));
            MultiplicativeStep(w, num, den);
        }
        const double next = SquaredResidual(a, w, h);
        model.objective.push_back(next);
        const double improvement = obj > 0.0 ? (obj - next) / obj : 0.0;
        obj = next;
        if (improvement < opts.tol) break;
    }

    model.w = ToTensor(w);
    model.h = ToTensor(h);
    model.error = std::sqrt(obj);
    return model;
}

NmfModel
nmf_factorize(const Tensor& a, std::size_t k, std::size_t iters, std::uint64_t seed) {
    NmfOptions opts;
    opts.rank = k;
    opts.max_iters = iters;
    opts.seed = seed;
    return nmf_factorize(a, opts);
}

Tensor
activation_matrix(std::span<const Tensor> acts) {
    if (acts.empty()) {
        throw DataError("activation_matrix: no activations");
    }
    const Shape& shape = acts.front().shape();
    if (shape.size() != 3) {
        throw ShapeError("activation_matrix expects [C,H,W] tensors, got " + shape_to_string(shape));
    }
    const std::size_t c = shape[0], plane = shape[1] * shape[2];
    std::vector<float> data(acts.size() * plane * c);
    for (std::size_t n = 0; n < acts.size(); ++n) {
        if (acts[n].shape() != shape) {
            throw ShapeError("activation_matrix: mixed shapes " + shape_to_string(shape) + " and " +
                             shape_to_string(acts[n].shape()));
        }
        const float* src = acts[n].data();
        float* dst = data.data() + n * plane * c;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t p = 0; p < plane; ++p) {
                dst[p * c + ch] = src[ch * plane + p];
            }
        }
    }
    return Tensor({acts.size() * plane, c}, std::move(data));
}

std::vector<Ncav>
ncavs_from_model(const NmfModel& model, std::size_t layer_id) {
    std::vector<Ncav> out;
    const std::size_t c = model.h.dim(1);
    for (std::size_t j = 0; j < model.rank; ++j) {
        Ncav n;
        n.layer_id = layer_id;
        n.component_index = j;
        n.vector.assign(model.h.data() + j * c, model.h.data() + (j + 1) * c);
        if (std::any_of(n.vector.begin(), n.vector.end(), [](float v) { return v > 0.0f; })) {
            out.push_back(std::move(n));
        }
    }
    return out;
}

Tensor
ncav_heatmap(const Ncav& ncav, const Tensor& act) {
    act.require_rank(3, "ncav_heatmap");
    if (act.dim(0) != ncav.vector.size()) {
        throw ShapeError("ncav_heatmap: NCAV has " + std::to_string(ncav.vector.size()) +
                         " channels, activation has " + std::to_string(act.dim(0)));
    }
    const auto& k = simd::active();
    const std::size_t plane = act.dim(1) * act.dim(2);
    std::vector<double> raw(plane, 0.0);
    std::vector<double> channel(plane);
    for (std::size_t c = 0; c < act.dim(0); ++c) {
        const float* src = act.data() + c * plane;
        std::copy(src, src + plane, channel.begin());
        k.axpy_f64(ncav.vector[c], channel.data(), raw.data(), plane);
    }
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double min = *lo, range = *hi - *lo;
    std::vector<float> out(plane, 0.0f);
    if (range > 0.0) {
        for (std::size_t i = 0; i < plane; ++i) {
            out[i] = static_cast<float>(std::clamp((raw[i] - min) / range, 0.0, 1.0));
        }
    }
    return Tensor({act.dim(1), act.dim(2)}, std::move(out));
}

}  // namespace csk
