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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace csk {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major f32 array. The innermost axis is contiguous.
///
/// Holds activations ([C,H,W] or [N,C,H,W]), gradients, images and weight
/// vectors. Construction checks that data length equals the shape volume.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<float> data);

    static Tensor filled(Shape shape, float value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<const float> values() const { return data_; }
    std::span<float> values() { return data_; }
    const float* data() const { return data_.data(); }
    float* data() { return data_.data(); }

    float operator[](std::size_t i) const { return data_[i]; }
    float& operator[](std::size_t i) { return data_[i]; }

    // Indexed access for the common ranks; no bounds checks beyond debug asserts.
    float at(std::size_t i, std::size_t j) const;
    float at(std::size_t c, std::size_t h, std::size_t w) const;
    float& at(std::size_t c, std::size_t h, std::size_t w);

    /// Same data, new shape of equal volume.
    Tensor reshaped(Shape shape) const;

    /// Sample i of a batched tensor [N, ...] as a tensor of rank-1.
    Tensor slice(std::size_t index) const;

    bool all_finite() const;

    /// Throws ShapeError unless rank() == expected.
    void require_rank(std::size_t expected, const char* what) const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

/// Stacks equally-shaped tensors into [N, ...].
Tensor stack(std::span<const Tensor> items);

}  // namespace csk
