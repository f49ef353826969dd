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

// .cav layout, little-endian:
//
//   "CCAV"  u32 version=1
//   u32 id_len, id bytes          concept_id
//   u64 layer_id
//   u32 mode                      1, 2 or 3
//   u64 layer dims x3             [C,H,W]
//   u64 run_seed
//   f32 train_f1
//   f32 bias
//   u32 flags                     bit0 = convergence warning
//   CTEN weights                  shaped by mode
//   CTEN feature_mean             [features]
//   CTEN feature_scale            [features]

#include <bit>
#include <cstring>

#include "csk/cav.hpp"
#include "csk/tensor_io.hpp"

namespace csk {

namespace {

constexpr char kCavMagic[4] = {'C', 'C', 'A', 'V'};
constexpr std::uint32_t kCavVersion = 1;

template <typename U>
void
Put(std::vector<std::uint8_t>& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    const std::uint8_t* take(std::size_t n) {
        if (bytes_.size() - pos_ < n) {
            throw DataError(".cav file truncated at offset " + std::to_string(pos_));
        }
        const auto* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    template <typename U>
    U get() {
        const auto* p = take(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
        return v;
    }

    Tensor tensor() {
        std::size_t consumed = 0;
        Tensor t = decode_tensor(bytes_.subspan(pos_), consumed);
        pos_ += consumed;
        return t;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t
ModeCode(CavMode m) {
    return static_cast<std::uint32_t>(m) + 1;
}

}  // namespace

std::vector<std::uint8_t>
encode_cav(const Cav& cav) {
    if (cav.layer_shape.size() != 3) {
        throw ShapeError(".cav requires a [C,H,W] layer shape");
    }
    std::vector<std::uint8_t> out(std::begin(kCavMagic), std::end(kCavMagic));
    Put<std::uint32_t>(out, kCavVersion);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(cav.concept_id.size()));
    out.insert(out.end(), cav.concept_id.begin(), cav.concept_id.end());
    Put<std::uint64_t>(out, cav.layer_id);
    Put<std::uint32_t>(out, ModeCode(cav.mode));
    for (std::size_t d : cav.layer_shape) Put<std::uint64_t>(out, d);
    Put<std::uint64_t>(out, cav.run_seed);
    Put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(cav.train_f1));
    Put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(cav.bias));
    Put<std::uint32_t>(out, cav.convergence_warning ? 1u : 0u);
    auto append = [&](const Tensor& t) {
        auto bytes = encode_tensor(t);
        out.insert(out.end(), bytes.begin(), bytes.end());
    };
    append(Tensor(cav.weight_shape(), cav.weights));
    append(Tensor({cav.feature_mean.size()}, cav.feature_mean));
    append(Tensor({cav.feature_scale.size()}, cav.feature_scale));
    return out;
}

Cav
decode_cav(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(4), kCavMagic, 4) != 0) {
        throw DataError(".cav: bad magic");
    }
    if (const auto v = r.get<std::uint32_t>(); v != kCavVersion) {
        throw DataError(".cav: unsupported version " + std::to_string(v));
    }
    Cav cav;
    const auto id_len = r.get<std::uint32_t>();
    const auto* id = r.take(id_len);
    cav.concept_id.assign(reinterpret_cast<const char*>(id), id_len);
    cav.layer_id = static_cast<std::size_t>(r.get<std::uint64_t>());
    const auto mode = r.get<std::uint32_t>();
    if (mode < 1 || mode > 3) {
        throw DataError(".cav: invalid mode " + std::to_string(mode));
    }
    cav.mode = static_cast<CavMode>(mode - 1);
    cav.layer_shape.resize(3);
    for (auto& d : cav.layer_shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    cav.run_seed = r.get<std::uint64_t>();
    cav.train_f1 = std::bit_cast<float>(r.get<std::uint32_t>());
    cav.bias = std::bit_cast<float>(r.get<std::uint32_t>());
    cav.convergence_warning = (r.get<std::uint32_t>() & 1u) != 0;

    Tensor weights = r.tensor();
    Tensor mean = r.tensor();
    Tensor scale = r.tensor();
    if (!r.done()) {
        throw DataError(".cav: trailing bytes");
    }
    const std::size_t n = mode_feature_length(cav.mode, cav.layer_shape);
    if (weights.size() != n || mean.size() != n || scale.size() != n) {
        throw ShapeError(".cav: payload length does not match mode " + std::string(to_string(cav.mode)) +
                         " on layer " + shape_to_string(cav.layer_shape));
    }
    cav.weights.assign(weights.values().begin(), weights.values().end());
    cav.feature_mean.assign(mean.values().begin(), mean.values().end());
    cav.feature_scale.assign(scale.values().begin(), scale.values().end());
    return cav;
}

void
write_cav(const std::filesystem::path& path, const Cav& cav) {
    write_file_bytes(path, encode_cav(cav));
}

Cav
read_cav(const std::filesystem::path& path) {
    return decode_cav(read_file_bytes(path));
}

}  // namespace csk
