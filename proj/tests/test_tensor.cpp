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

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include <doctest.h>

#include "csk/aggregate.hpp"
#include "csk/error.hpp"
#include "csk/tensor.hpp"
#include "csk/tensor_io.hpp"
#include "test_util.hpp"

using namespace csk;

namespace {

Tensor
Cube222() {
    return Tensor({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
}

TensorFormatErrc
DecodeError(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_tensor(bytes);
    } catch (const TensorFormatError& e) {
        return e.code();
    }
    FAIL("decode did not throw");
    return TensorFormatErrc::Io;
}

template <typename T>
void
Poke(std::vector<std::uint8_t>& bytes, std::size_t offset, T value) {
    std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

}  // namespace

TEST_CASE("tensor construction validates volume") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<float>(5)), ShapeError);
    const Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.dim(1) == 3);
    CHECK_THROWS_AS((void)t.dim(2), ShapeError);
    CHECK(Cube222().at(1, 0, 1) == 6.0f);
}

TEST_CASE("1D aggregation hand examples") {
    const Tensor a = aggregate_1d(Cube222());
    REQUIRE(a.size() == 2);
    CHECK(a[0] == doctest::Approx(2.5));
    CHECK(a[1] == doctest::Approx(6.5));

    const Tensor c = aggregate_1d(Tensor::filled({3, 4, 5}, 1.25f));
    for (float v : c.values()) CHECK(v == 1.25f);

    const Tensor one = aggregate_1d(Tensor({1, 1, 1}, {3.0f}));
    CHECK(one.size() == 1);
    CHECK(one[0] == 3.0f);
}

TEST_CASE("2D aggregation hand examples") {
    const Tensor a = aggregate_2d(Cube222());
    CHECK(a.shape() == Shape{2, 2});
    CHECK(a.at(0, 0) == doctest::Approx(3));
    CHECK(a.at(0, 1) == doctest::Approx(4));
    CHECK(a.at(1, 0) == doctest::Approx(5));
    CHECK(a.at(1, 1) == doctest::Approx(6));

    Rng rng(3);
    const Tensor single = test::random_tensor({1, 3, 4}, rng);
    const Tensor s = aggregate_2d(single);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == single[i]);

    const Tensor zeros = aggregate_2d(Tensor({4, 3, 3}));
    for (float v : zeros.values()) CHECK(v == 0.0f);
}

TEST_CASE("aggregation rejects wrong rank") {
    CHECK_THROWS_AS(aggregate_1d(Tensor({2, 2})), ShapeError);
    CHECK_THROWS_AS(aggregate_2d(Tensor({2, 2, 2, 2})), ShapeError);
}

TEST_CASE("aggregations preserve the overall mean") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Shape shape{1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6)};
        const Tensor t = test::random_tensor(shape, rng, -3, 3);
        const double mean = std::accumulate(t.values().begin(), t.values().end(), 0.0) / t.size();
        const Tensor a = aggregate_1d(t), b = aggregate_2d(t);
        const double ma = std::accumulate(a.values().begin(), a.values().end(), 0.0) / a.size();
        const double mb = std::accumulate(b.values().begin(), b.values().end(), 0.0) / b.size();
        CHECK(std::abs(ma - mean) < 1e-6);
        CHECK(std::abs(mb - mean) < 1e-6);
    }
}

TEST_CASE("aggregations are linear") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const Shape shape{1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5)};
        const Tensor t1 = test::random_tensor(shape, rng), t2 = test::random_tensor(shape, rng);
        const float a = static_cast<float>(rng.uniform(-2, 2)), b = static_cast<float>(rng.uniform(-2, 2));
        Tensor mix(shape);
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * t1[i] + b * t2[i];
        for (auto agg : {aggregate_1d, aggregate_2d}) {
            const Tensor m = agg(mix), r1 = agg(t1), r2 = agg(t2);
            for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(m[i] - (a * r1[i] + b * r2[i])) < 1e-5);
        }
    }
}

TEST_CASE("feature lengths per mode") {
    const Shape s{4, 3, 2};
    CHECK(mode_feature_length(CavMode::OneD, s) == 4);
    CHECK(mode_feature_length(CavMode::TwoD, s) == 6);
    CHECK(mode_feature_length(CavMode::ThreeD, s) == 24);
    CHECK(parse_cav_mode("2D") == CavMode::TwoD);
    CHECK_FALSE(parse_cav_mode("4D").has_value());
    CHECK(to_string(CavMode::ThreeD) == "3D");
}

TEST_CASE("CTEN round trip of a [3,4,5] tensor, in memory and on disk") {
    Rng rng(1);
    const Tensor t = test::random_tensor({3, 4, 5}, rng);
    const auto bytes = encode_tensor(t);
    CHECK(bytes.size() == 4 + 4 + 4 + 3 * 8 + 4 + 60 * 4);
    CHECK(decode_tensor(bytes) == t);

    test::TempDir dir("tensor");
    write_tensor(dir / "a/b/t.cten", t);
    const Tensor back = read_tensor(dir / "a/b/t.cten");
    CHECK(std::memcmp(back.data(), t.data(), t.size() * sizeof(float)) == 0);
    CHECK(read_file_bytes(dir / "a/b/t.cten") == bytes);
}

TEST_CASE("CTEN randomized round trip is bit-exact") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        Shape shape(rng.below(5));
        for (auto& d : shape) d = rng.below(6);
        Tensor t(shape);
        for (float& v : t.values()) {
            // Arbitrary finite bit patterns, including subnormals and signed zeros.
            std::uint32_t bits;
            do {
                bits = static_cast<std::uint32_t>(rng.next_u64());
            } while (((bits >> 23) & 0xff) == 0xff);
            std::memcpy(&v, &bits, sizeof(bits));
        }
        const auto bytes = encode_tensor(t);
        const Tensor back = decode_tensor(bytes);
        REQUIRE(back.shape() == t.shape());
        REQUIRE(std::memcmp(back.data(), t.data(), t.size() * sizeof(float)) == 0);
        REQUIRE(encode_tensor(back) == bytes);
    }
}

TEST_CASE("CTEN malformed headers raise distinct errors") {
    const Tensor t({2, 2}, {1, 2, 3, 4});
    const auto good = encode_tensor(t);

    auto bad_magic = good;
    std::memcpy(bad_magic.data(), "XXXX", 4);
    CHECK(DecodeError(bad_magic) == TensorFormatErrc::BadMagic);
    try {
        decode_tensor(bad_magic);
    } catch (const TensorFormatError& e) {
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }

    auto truncated = good;
    truncated.resize(truncated.size() - 4);
    CHECK(DecodeError(truncated) == TensorFormatErrc::Truncated);
    try {
        decode_tensor(truncated);
    } catch (const TensorFormatError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    auto dtype = good;
    Poke<std::uint32_t>(dtype, 12 + 2 * 8, 7);
    CHECK(DecodeError(dtype) == TensorFormatErrc::UnsupportedDtype);

    auto version = good;
    Poke<std::uint32_t>(version, 4, 9);
    CHECK(DecodeError(version) == TensorFormatErrc::UnsupportedVersion);

    auto trailing = good;
    trailing.push_back(0);
    CHECK(DecodeError(trailing) == TensorFormatErrc::TrailingBytes);

    CHECK(DecodeError({}) == TensorFormatErrc::Truncated);

    // All format errors are data errors to callers.
    CHECK_THROWS_AS(decode_tensor(bad_magic), DataError);
}

TEST_CASE("CTEN reader rejects non-finite payloads") {
    Tensor t({2});
    t[1] = std::numeric_limits<float>::quiet_NaN();
    auto bytes = encode_tensor(Tensor({2}));
    std::memcpy(bytes.data() + bytes.size() - 4, &t[1], 4);
    CHECK_THROWS_AS(decode_tensor(bytes), DataError);
}

TEST_CASE("stack and slice") {
    Rng rng(8);
    std::vector<Tensor> items{test::random_tensor({2, 3}, rng), test::random_tensor({2, 3}, rng)};
    const Tensor s = stack(items);
    CHECK(s.shape() == Shape{2, 2, 3});
    CHECK(s.slice(1) == items[1]);
    items.push_back(Tensor({3, 2}));
    CHECK_THROWS_AS(stack(items), ShapeError);
}
