#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "salicache/error.hpp"
#include "salicache/quant.hpp"

using namespace salicache;

namespace {

std::vector<float> random_block(std::mt19937& rng, std::size_t len, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(len);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("round_half_even") {
    CHECK(round_half_even(0.5) == 0.0);
    CHECK(round_half_even(1.5) == 2.0);
    CHECK(round_half_even(2.5) == 2.0);
    CHECK(round_half_even(63.5) == 64.0);
    CHECK(round_half_even(-0.5) == 0.0);
    CHECK(round_half_even(-1.5) == -2.0);
    CHECK(round_half_even(-2.4) == -2.0);
    CHECK(round_half_even(2.6) == 3.0);
}

TEST_CASE("int8 examples") {
    SUBCASE("[1, -2, 0.5]") {
        const std::vector<float> x{1.0f, -2.0f, 0.5f};
        const auto q = quantize_int8(x);
        CHECK(q.scale() == doctest::Approx(2.0 / 127.0));
        CHECK(q.values == std::vector<std::int8_t>{64, -127, 32});
        const auto d = dequantize_int8(q);
        CHECK(d[0] == doctest::Approx(1.007874).epsilon(1e-6));
        CHECK(d[1] == -2.0f);
        CHECK(d[2] == doctest::Approx(0.503937).epsilon(1e-6));
    }
    SUBCASE("all zero") {
        const auto q = quantize_int8(std::vector<float>{0, 0, 0});
        CHECK(q.scale() == 0.0f);
        CHECK(q.values == std::vector<std::int8_t>{0, 0, 0});
        for (float v : dequantize_int8(q)) CHECK(v == 0.0f);
    }
    SUBCASE("single extremum is exact") {
        const auto q = quantize_int8(std::vector<float>{3.0f});
        CHECK(q.scale() == doctest::Approx(3.0 / 127.0));
        CHECK(q.values == std::vector<std::int8_t>{127});
        CHECK(dequantize_int8(q)[0] == 3.0f);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(quantize_int8(std::vector<float>{}), ConfigError);
        CHECK_THROWS_AS(quantize_int8(std::vector<float>{1.0f, NAN}), ConfigError);
        CHECK_THROWS_AS(quantize_int8(std::vector<float>{INFINITY}), ConfigError);
    }
}

TEST_CASE("int4 examples") {
    SUBCASE("[0, 1, 2, 3]") {
        const auto q = quantize_int4(std::vector<float>{0, 1, 2, 3});
        CHECK(q.offset == 0.0f);
        CHECK(q.scale() == doctest::Approx(0.2));
        for (std::size_t i = 0; i < 4; ++i) CHECK(q.code(i) == std::vector<int>{0, 5, 10, 15}[i]);
        CHECK(dequantize_int4(q) == std::vector<float>{0, 1, 2, 3});
    }
    SUBCASE("constant block keeps its value via the offset") {
        const auto q = quantize_int4(std::vector<float>{-1, -1});
        CHECK(q.scale() == 0.0f);
        CHECK(q.offset == -1.0f);
        CHECK(dequantize_int4(q) == std::vector<float>{-1, -1});
    }
    SUBCASE("endpoints") {
        const auto q = quantize_int4(std::vector<float>{-2, 1});
        CHECK(q.code(0) == 0);
        CHECK(q.code(1) == 15);
        CHECK(dequantize_int4(q) == std::vector<float>{-2, 1});
    }
    SUBCASE("nibble packing, odd count leaves the last high nibble zero") {
        const auto q = quantize_int4(std::vector<float>{0, 15, 3, 7, 15});
        REQUIRE(q.packed.size() == 3);
        CHECK(q.packed[0] == 0xF0);
        CHECK(q.packed[1] == 0x73);
        CHECK(q.packed[2] == 0x0F);
        CHECK(q.element_count == 5);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(quantize_int4(std::vector<float>{}), ConfigError);
        CHECK_THROWS_AS(quantize_int4(std::vector<float>{NAN}), ConfigError);
    }
}

TEST_CASE("round-trip bounds and idempotence on random blocks") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 1500; ++trial) {
        const std::size_t len = 1 + rng() % 80;
        const auto x = random_block(rng, len, -10.0f, 10.0f);

        const auto q8 = quantize_int8(x);
        const auto d8 = dequantize_int8(q8);
        const double s8 = q8.scale();
        float abs_max = 0;
        for (float v : x) abs_max = std::max(abs_max, std::abs(v));
        for (std::size_t i = 0; i < len; ++i) {
            CHECK(std::abs(x[i] - d8[i]) <= s8 / 2 + 1e-6);
            CHECK(std::abs(q8.values[i]) <= 127);
        }
        CHECK(std::abs(x[0] - d8[0]) <= abs_max / 254.0 + 1e-6);
        CHECK(quantize_int8(d8).values == q8.values);

        const auto q4 = quantize_int4(x);
        const auto d4 = dequantize_int4(q4);
        const double s4 = q4.scale();
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        CHECK(q4.packed.size() == (len + 1) / 2);
        for (std::size_t i = 0; i < len; ++i) {
            CHECK(std::abs(x[i] - d4[i]) <= s4 / 2 + 1e-6);
            CHECK(q4.code(i) <= 15);
        }
        CHECK(d4[static_cast<std::size_t>(lo - x.begin())] == *lo);
        CHECK(d4[static_cast<std::size_t>(hi - x.begin())] == *hi);
        const auto again = quantize_int4(d4);
        CHECK(again.packed == q4.packed);
        if (len % 2 == 1) CHECK((q4.packed.back() >> 4) == 0);
    }
}

TEST_CASE("binary16 conversion") {
    CHECK(from_half(to_half(std::vector<float>{1.0f}))[0] == 1.0f);
    CHECK(float_to_half_bits(0.1f) == 0x2E66);
    CHECK(half_bits_to_float(0x2E66) == 0.0999755859375f);
    CHECK(float_to_half_bits(65504.0f) == 0x7BFF);
    CHECK(float_to_half_bits(65519.0f) == 0x7BFF);
    CHECK_THROWS_WITH_AS(to_half(std::vector<float>{65520.0f}), doctest::Contains("half overflow"), InvariantError);
    CHECK(float_to_half_bits(-0.0f) == 0x8000);
    CHECK(float_to_half_bits(std::ldexp(1.0f, -24)) == 0x0001);   // smallest subnormal
    CHECK(float_to_half_bits(std::ldexp(1.0f, -25)) == 0x0000);   // tie rounds to even (zero)
    CHECK(float_to_half_bits(std::ldexp(3.0f, -25)) == 0x0002);   // 1.5 ulp rounds to even (2)
    CHECK(float_to_half_bits(1.0f + std::ldexp(1.0f, -11)) == 0x3C00);  // tie between 1 and 1+2^-10 -> even
    CHECK(float_to_half_bits(1.0f + std::ldexp(3.0f, -11)) == 0x3C02);

    SUBCASE("every finite half survives half -> float -> half") {
        for (std::uint32_t h = 0; h < 0x10000; ++h) {
            if ((h & 0x7c00u) == 0x7c00u) continue;
            const float f = half_bits_to_float(static_cast<std::uint16_t>(h));
            CHECK(float_to_half_bits(f) == h);
        }
    }
    SUBCASE("relative error at most 2^-11 for normal values") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<float> mant(1.0f, 2.0f);
        std::uniform_int_distribution<int> ex(-14, 15);
        for (int i = 0; i < 20000; ++i) {
            const float x = std::ldexp(mant(rng), ex(rng)) * (i % 2 ? -1.0f : 1.0f);
            if (std::abs(x) > 65504.0f) continue;
            const float y = half_bits_to_float(float_to_half_bits(x));
            CHECK(std::abs(y - x) <= std::abs(x) * std::ldexp(1.0, -11));
        }
    }
}

TEST_CASE("bytes-per-element accounting") {
    CHECK(fp16_bytes(32).payload == 64);
    CHECK(fp16_bytes(32).metadata == 0);
    CHECK(int8_bytes(32).payload == 32);
    CHECK(int8_bytes(32).metadata == 4);
    CHECK(int4_bytes(32).payload == 16);
    CHECK(int4_bytes(32).metadata == 8);
    CHECK(int4_bytes(7).payload == 4);
}
