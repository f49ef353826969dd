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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "csk/error.hpp"
#include "csk/tensor.hpp"

namespace csk {

// CTEN layout, all integers little-endian:
//
//   offset  size        field
//   0       4           magic "CTEN"
//   4       4 (u32)     version = 1
//   8       4 (u32)     ndim
//   12      8*ndim      dims (u64 each)
//   ..      4 (u32)     dtype, 1 = f32
//   ..      4*volume    payload, row-major f32
inline constexpr char kCtenMagic[4] = {'C', 'T', 'E', 'N'};
inline constexpr std::uint32_t kCtenVersion = 1;
inline constexpr std::uint32_t kCtenDtypeF32 = 1;
inline constexpr const char* kCtenExtension = ".cten";

enum class TensorFormatErrc {
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    Truncated,
    TrailingBytes,
    Io,
};

class TensorFormatError : public DataError {
public:
    TensorFormatError(TensorFormatErrc code, const std::string& detail);
    TensorFormatErrc code() const { return code_; }

private:
    TensorFormatErrc code_;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);

/// Decodes one CTEN record starting at bytes[0]. On success `consumed` holds
/// the record length so callers can read CTEN payloads embedded in other
/// containers.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& consumed);

/// Decodes a buffer that must contain exactly one CTEN record.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Whole-file helpers shared by the other binary formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace csk
