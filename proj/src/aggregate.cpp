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

#include "csk/aggregate.hpp"

#include <algorithm>

#include "csk/error.hpp"
#include "csk/simd/kernels.hpp"

namespace csk {

std::string_view
to_string(CavMode mode) {
    switch (mode) {
        case CavMode::OneD:
            return "1D";
        case CavMode::TwoD:
            return "2D";
        case CavMode::ThreeD:
            return "3D";
    }
    return "?";
}

std::optional<CavMode>
parse_cav_mode(std::string_view text) {
    if (text == "1D" || text == "1d") return CavMode::OneD;
    if (text == "2D" || text == "2d") return CavMode::TwoD;
    if (text == "3D" || text == "3d") return CavMode::ThreeD;
    return std::nullopt;
}

std::size_t
mode_feature_length(CavMode mode, const Shape& layer_shape) {
    if (layer_shape.size() != 3) {
        throw ShapeError("layer shape must be [C,H,W], got " + shape_to_string(layer_shape));
    }
    switch (mode) {
        case CavMode::OneD:
            return layer_shape[0];
        case CavMode::TwoD:
            return layer_shape[1] * layer_shape[2];
        case CavMode::ThreeD:
            return layer_shape[0] * layer_shape[1] * layer_shape[2];
    }
    return 0;
}

namespace {

void
ChannelMeans(const float* src, std::size_t channels, std::size_t plane, double* out) {
    const auto& k = simd::active();
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t c = 0; c < channels; ++c) {
        out[c] = k.sum_f32(src + c * plane, plane) * inv;
    }
}

void
SpatialMeans(const float* src, std::size_t channels, std::size_t plane, double* out) {
    const auto& k = simd::active();
    std::fill(out, out + plane, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        k.accumulate_f32(src + c * plane, out, plane);
    }
    const double inv = 1.0 / static_cast<double>(channels);
    for (std::size_t i = 0; i < plane; ++i) {
        out[i] *= inv;
    }
}

Tensor
ToTensor(Shape shape, const std::vector<double>& values) {
    return Tensor(std::move(shape), std::vector<float>(values.begin(), values.end()));
}

}  // namespace

Tensor
aggregate_1d(const Tensor& act) {
    act.require_rank(3, "aggregate_1d");
    const std::size_t c = act.dim(0), plane = act.dim(1) * act.dim(2);
    std::vector<double> out(c);
    ChannelMeans(act.data(), c, plane, out.data());
    return ToTensor({c}, out);
}

Tensor
aggregate_2d(const Tensor& act) {
    act.require_rank(3, "aggregate_2d");
    const std::size_t c = act.dim(0), plane = act.dim(1) * act.dim(2);
    std::vector<double> out(plane);
    SpatialMeans(act.data(), c, plane, out.data());
    return ToTensor({act.dim(1), act.dim(2)}, out);
}

Tensor
aggregate_1d_batch(const Tensor& acts) {
    acts.require_rank(4, "aggregate_1d_batch");
    const std::size_t n = acts.dim(0), c = acts.dim(1), plane = acts.dim(2) * acts.dim(3);
    std::vector<double> out(n * c);
    for (std::size_t i = 0; i < n; ++i) {
        ChannelMeans(acts.data() + i * c * plane, c, plane, out.data() + i * c);
    }
    return ToTensor({n, c}, out);
}

Tensor
aggregate_2d_batch(const Tensor& acts) {
    acts.require_rank(4, "aggregate_2d_batch");
    const std::size_t n = acts.dim(0), c = acts.dim(1), plane = acts.dim(2) * acts.dim(3);
    std::vector<double> out(n * plane);
    for (std::size_t i = 0; i < n; ++i) {
        SpatialMeans(acts.data() + i * c * plane, c, plane, out.data() + i * plane);
    }
    return ToTensor({n, acts.dim(2), acts.dim(3)}, out);
}

std::vector<double>
aggregate_features(CavMode mode, const Tensor& act) {
    act.require_rank(3, "aggregate_features");
    const std::size_t c = act.dim(0), plane = act.dim(1) * act.dim(2);
    std::vector<double> out;
    switch (mode) {
        case CavMode::OneD:
            out.resize(c);
            ChannelMeans(act.data(), c, plane, out.data());
            break;
        case CavMode::TwoD:
            out.resize(plane);
            SpatialMeans(act.data(), c, plane, out.data());
            break;
        case CavMode::ThreeD:
            out.assign(act.values().begin(), act.values().end());
            break;
    }
    return out;
}

}  // namespace csk
