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

#include "csk/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace csk {

namespace {

const char*
ErrcMessage(TensorFormatErrc code) {
    switch (code) {
        case TensorFormatErrc::BadMagic:
            return "bad magic";
        case TensorFormatErrc::UnsupportedVersion:
            return "unsupported version";
        case TensorFormatErrc::UnsupportedDtype:
            return "unsupported dtype";
        case TensorFormatErrc::Truncated:
            return "truncated";
        case TensorFormatErrc::TrailingBytes:
            return "trailing bytes";
        case TensorFormatErrc::Io:
            return "i/o error";
    }
    return "unknown";
}

template <typename U>
void
PutLe(std::vector<std::uint8_t>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

template <typename U>
U
GetLe(const std::uint8_t* p) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(p[i]) << (8 * i);
    }
    return value;
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    const std::uint8_t* take(std::size_t n, const char* field) {
        if (bytes_.size() - pos_ < n) {
            throw TensorFormatError(TensorFormatErrc::Truncated,
                                    std::string("while reading ") + field + " at offset " + std::to_string(pos_));
        }
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

TensorFormatError::TensorFormatError(TensorFormatErrc code, const std::string& detail)
    : DataError(std::string(ErrcMessage(code)) + (detail.empty() ? "" : ": " + detail)), code_(code) {}

std::vector<std::uint8_t>
encode_tensor(const Tensor& t) {
    if (!t.all_finite()) {
        throw DataError("refusing to encode a tensor with non-finite values");
    }
    std::vector<std::uint8_t> out;
    out.reserve(20 + 8 * t.rank() + 4 * t.size());
    out.insert(out.end(), std::begin(kCtenMagic), std::end(kCtenMagic));
    PutLe<std::uint32_t>(out, kCtenVersion);
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) {
        PutLe<std::uint64_t>(out, d);
    }
    PutLe<std::uint32_t>(out, kCtenDtypeF32);
    for (float v : t.values()) {
        PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Tensor
decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
    Cursor cur(bytes);
    const std::uint8_t* magic = cur.take(4, "magic");
    if (std::memcmp(magic, kCtenMagic, 4) != 0) {
        throw TensorFormatError(TensorFormatErrc::BadMagic, "expected \"CTEN\"");
    }
    const auto version = GetLe<std::uint32_t>(cur.take(4, "version"));
    if (version != kCtenVersion) {
        throw TensorFormatError(TensorFormatErrc::UnsupportedVersion, "version " + std::to_string(version));
    }
    const auto ndim = GetLe<std::uint32_t>(cur.take(4, "ndim"));
    Shape shape;
    shape.reserve(ndim);
    std::uint64_t volume = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        const auto d = GetLe<std::uint64_t>(cur.take(8, "dims"));
        if (d != 0 && volume > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
            throw TensorFormatError(TensorFormatErrc::Truncated, "shape volume overflows the payload");
        }
        volume *= d;
        shape.push_back(static_cast<std::size_t>(d));
    }
    const auto dtype = GetLe<std::uint32_t>(cur.take(4, "dtype"));
    if (dtype != kCtenDtypeF32) {
        throw TensorFormatError(TensorFormatErrc::UnsupportedDtype, "dtype " + std::to_string(dtype));
    }
    const std::uint8_t* payload = cur.take(static_cast<std::size_t>(volume) * 4, "payload");
    std::vector<float> data(static_cast<std::size_t>(volume));
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(GetLe<std::uint32_t>(payload + 4 * i));
        if (!std::isfinite(data[i])) {
            throw DataError("tensor payload holds a non-finite value at index " + std::to_string(i));
        }
    }
    consumed = cur.position();
    return Tensor(std::move(shape), std::move(data));
}

Tensor
decode_tensor(std::span<const std::uint8_t> bytes) {
    std::size_t consumed = 0;
    Tensor t = decode_tensor(bytes, consumed);
    if (consumed != bytes.size()) {
        throw TensorFormatError(TensorFormatErrc::TrailingBytes,
                                std::to_string(bytes.size() - consumed) + " bytes after payload");
    }
    return t;
}

std::vector<std::uint8_t>
read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TensorFormatError(TensorFormatErrc::Io, "cannot open " + path.string());
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void
write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw TensorFormatError(TensorFormatErrc::Io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw TensorFormatError(TensorFormatErrc::Io, "short write to " + path.string());
    }
}

void
write_tensor(const std::filesystem::path& path, const Tensor& t) {
    write_file_bytes(path, encode_tensor(t));
}

Tensor
read_tensor(const std::filesystem::path& path) {
    return decode_tensor(read_file_bytes(path));
}

}  // namespace csk
