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

#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "csk/tensor.hpp"

namespace csk {

/// Dimensionality of a concept vector over a [C,H,W] layer.
///   OneD   -> C x 1 x 1 (mean over H,W)
///   TwoD   -> 1 x H x W (mean over C)
///   ThreeD -> C x H x W (no reduction)
enum class CavMode { OneD, TwoD, ThreeD };

inline constexpr std::array<CavMode, 3> kAllModes{CavMode::OneD, CavMode::TwoD, CavMode::ThreeD};

std::string_view to_string(CavMode mode);
std::optional<CavMode> parse_cav_mode(std::string_view text);

/// Flattened feature length for a layer of shape [C,H,W].
std::size_t mode_feature_length(CavMode mode, const Shape& layer_shape);

/// [C,H,W] -> [C], mean over every spatial position.
Tensor aggregate_1d(const Tensor& act);
/// [C,H,W] -> [H,W], mean over channels.
Tensor aggregate_2d(const Tensor& act);

/// Batched forms: [N,C,H,W] -> [N,C] and [N,H,W].
Tensor aggregate_1d_batch(const Tensor& acts);
Tensor aggregate_2d_batch(const Tensor& acts);

/// Mode-dependent reduction of a [C,H,W] tensor into a flat f64 feature
/// vector. ThreeD is a plain flatten.
std::vector<double> aggregate_features(CavMode mode, const Tensor& act);

}  // namespace csk
