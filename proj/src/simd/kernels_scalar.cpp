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

#include "csk/simd/kernels.hpp"

namespace csk::simd {
namespace generic {

static double
DotF32(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

static double
DotF64(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

static double
DotF64F32(const double* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * static_cast<double>(b[i]);
    }
    return acc;
}

static double
SumF32(const float* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(x[i]);
    }
    return acc;
}

static double
SumF64(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

static void
AxpyF64(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

static void
AccumulateF32(const float* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        acc[i] += static_cast<double>(x[i]);
    }
}

}  // namespace generic

const Kernels&
scalar_kernels() {
    static const Kernels table{
        "scalar",
        generic::DotF32,
        generic::DotF64,
        generic::DotF64F32,
        generic::SumF32,
        generic::SumF64,
        generic::AxpyF64,
        generic::AccumulateF32,
    };
    return table;
}

}  // namespace csk::simd
