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

#include <cstdlib>
#include <string_view>

#include "csk/simd/kernels.hpp"

namespace csk::simd {

#if defined(CSK_HAVE_AVX2)
const Kernels& avx2_table();
#endif

static bool
CpuSupportsAvx2() {
#if defined(CSK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels*
avx2_kernels() {
#if defined(CSK_HAVE_AVX2)
    static const bool supported = CpuSupportsAvx2();
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

static const Kernels&
SelectKernels() {
    if (const char* env = std::getenv("CSK_SIMD")) {
        if (std::string_view(env) == "scalar") {
            return scalar_kernels();
        }
    }
    if (const Kernels* k = avx2_kernels()) {
        return *k;
    }
    return scalar_kernels();
}

const Kernels&
active() {
    static const Kernels& selected = SelectKernels();
    return selected;
}

}  // namespace csk::simd
