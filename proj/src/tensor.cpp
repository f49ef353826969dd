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

#include "csk/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "csk/error.hpp"

namespace csk {

std::size_t
shape_volume(const Shape& shape) {
    std::size_t v = 1;
    for (std::size_t d : shape) {
        v *= d;
    }
    return v;
}

std::string
shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_volume(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_to_string(shape_));
    }
}

Tensor
Tensor::filled(Shape shape, float value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

std::size_t
Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
    }
    return shape_[axis];
}

float
Tensor::at(std::size_t i, std::size_t j) const {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
}

float
Tensor::at(std::size_t c, std::size_t h, std::size_t w) const {
    assert(rank() == 3);
    return data_[(c * shape_[1] + h) * shape_[2] + w];
}

float&
Tensor::at(std::size_t c, std::size_t h, std::size_t w) {
    assert(rank() == 3);
    return data_[(c * shape_[1] + h) * shape_[2] + w];
}

Tensor
Tensor::reshaped(Shape shape) const {
    if (shape_volume(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor
Tensor::slice(std::size_t index) const {
    if (rank() < 2) {
        throw ShapeError("slice needs a batched tensor, got " + shape_to_string(shape_));
    }
    if (index >= shape_[0]) {
        throw IndexError("slice index " + std::to_string(index) + " out of range for " + shape_to_string(shape_));
    }
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t stride = shape_volume(inner);
    auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * stride);
    return Tensor(std::move(inner), std::vector<float>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

bool
Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void
Tensor::require_rank(std::size_t expected, const char* what) const {
    if (rank() != expected) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) + " axes, got " +
                         shape_to_string(shape_));
    }
}

Tensor
stack(std::span<const Tensor> items) {
    if (items.empty()) {
        throw ShapeError("stack: no tensors");
    }
    Shape shape = items.front().shape();
    std::vector<float> data;
    data.reserve(items.size() * items.front().size());
    for (const Tensor& t : items) {
        if (t.shape() != shape) {
            throw ShapeError("stack: mixed shapes " + shape_to_string(shape) + " and " + shape_to_string(t.shape()));
        }
        data.insert(data.end(), t.values().begin(), t.values().end());
    }
    shape.insert(shape.begin(), items.size());
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace csk
