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
#include <string_view>

namespace csk::simd {

// Inner-loop kernels shared by every numeric module. Each instruction set
// provides one table; the active table is chosen once at startup.
//
// Accumulation is always in f64. axpy is bit-identical across tables
// (separate multiply and add, no FMA contraction); reductions may differ in
// the last bits because lanes are summed in a different order.
struct Kernels {
    std::string_view name;

    // sum_i a[i] * b[i]
    double (*dot_f32)(const float* a, const float* b, std::size_t n);
    double (*dot_f64)(const double* a, const double* b, std::size_t n);
    // sum_i a[i] * (double)b[i]
    double (*dot_f64_f32)(const double* a, const float* b, std::size_t n);
    // sum_i x[i]
    double (*sum_f32)(const float* x, std::size_t n);
    double (*sum_f64)(const double* x, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
    // acc[i] += (double)x[i]
    void (*accumulate_f32)(const float* x, double* acc, std::size_t n);
};

/// Portable reference implementation; always available.
const Kernels& scalar_kernels();

/// AVX2+FMA table, or nullptr when the build or the CPU lacks support.
const Kernels* avx2_kernels();

/// Table used by the library. Selected on first use: CSK_SIMD=scalar forces
/// the reference path, otherwise the widest supported table wins.
const Kernels& active();

}  // namespace csk::simd
