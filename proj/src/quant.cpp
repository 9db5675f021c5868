#include "salicache/quant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "salicache/error.hpp"

namespace salicache {

namespace {

void require_finite(std::span<const float> block, const char* op) {
    if (block.empty()) throw ConfigError(std::string(op) + ": empty block");
    for (float v : block)
        if (!std::isfinite(v)) throw ConfigError(std::string(op) + ": NaN/Inf in input");
}

}  // namespace

double round_half_even(double x) {
    const double floor = std::floor(x);
    const double frac = x - floor;
    if (frac > 0.5) return floor + 1.0;
    if (frac < 0.5) return floor;
    return std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
}

// ---------------------------------------------------------------------------
// INT8

QuantBlockInt8 quantize_int8(std::span<const float> block) {
    require_finite(block, "quantize_int8");
    QuantBlockInt8 out;
    for (float v : block) out.abs_max = std::max(out.abs_max, std::abs(v));
    out.values.resize(block.size(), 0);
    if (out.abs_max == 0.0f) return out;
    // x / scale with scale = abs_max/127, evaluated without rounding the scale first.
    const double ratio = 127.0 / out.abs_max;
    for (std::size_t i = 0; i < block.size(); ++i) {
        const double q = std::clamp(round_half_even(block[i] * ratio), -127.0, 127.0);
        out.values[i] = static_cast<std::int8_t>(q);
    }
    return out;
}

std::vector<float> dequantize_int8(const QuantBlockInt8& block) {
    std::vector<float> out(block.values.size());
    const double m = block.abs_max;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(m * block.values[i] / 127.0);
    return out;
}

// ---------------------------------------------------------------------------
// INT4

QuantBlockInt4 quantize_int4(std::span<const float> block) {
    require_finite(block, "quantize_int4");
    const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
    QuantBlockInt4 out;
    out.offset = *lo;
    out.top = *hi;
    out.element_count = block.size();
    out.packed.assign((block.size() + 1) / 2, 0);
    const double range = static_cast<double>(out.top) - out.offset;
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < block.size(); ++i) {
        const double q = std::clamp(round_half_even((block[i] - static_cast<double>(out.offset)) * 15.0 / range), 0.0, 15.0);
        const auto code = static_cast<std::uint8_t>(q);
        out.packed[i / 2] |= (i % 2 == 0) ? code : static_cast<std::uint8_t>(code << 4);
    }
    return out;
}

std::vector<float> dequantize_int4(const QuantBlockInt4& block) {
    std::vector<float> out(block.element_count);
    const double lo = block.offset, hi = block.top;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double q = block.code(i);
        // Endpoint-weighted form: code 0 gives lo and code 15 gives hi exactly.
        out[i] = static_cast<float>((lo * (15.0 - q) + hi * q) / 15.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// binary16

std::uint16_t float_to_half_bits(float value) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
    const std::uint32_t sign = (bits >> 16) & 0x8000u;
    const std::uint32_t abs = bits & 0x7fffffffu;

    if (abs >= 0x7f800000u) {
        // Inf or NaN.
        return static_cast<std::uint16_t>(sign | 0x7c00u | (abs > 0x7f800000u ? 0x0200u : 0u));
    }
    if (abs >= 0x477ff000u) {
        // >= 65520 rounds to infinity.
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }
    if (abs < 0x38800000u) {
        // Result is subnormal (or zero): value / 2^-24 rounded half-even.
        if (abs < 0x33000000u) return static_cast<std::uint16_t>(sign);  // below half of the smallest subnormal
        const std::uint32_t mant = (abs & 0x007fffffu) | 0x00800000u;
        const int shift = 126 - static_cast<int>(abs >> 23);  // 14..24
        std::uint32_t half = mant >> shift;
        const std::uint32_t rem = mant & ((1u << shift) - 1u);
        const std::uint32_t midpoint = 1u << (shift - 1);
        if (rem > midpoint || (rem == midpoint && (half & 1u))) ++half;
        return static_cast<std::uint16_t>(sign | half);
    }
    // Normal: rebias exponent, drop 13 mantissa bits with round-half-even.
    std::uint32_t half = ((abs >> 13) - (112u << 10));
    const std::uint32_t rem = abs & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
}

float half_bits_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    const std::uint32_t mant = h & 0x3ffu;
    if (exp == 0) {
        const float magnitude = std::ldexp(static_cast<float>(mant), -24);
        return sign ? -magnitude : magnitude;
    }
    if (exp == 31) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
    return std::bit_cast<float>(sign | ((exp + 112u) << 23) | (mant << 13));
}

HalfBlock to_half(std::span<const float> block) {
    HalfBlock out;
    out.values.reserve(block.size());
    for (float v : block) {
        if (!std::isfinite(v)) throw ConfigError("to_half: NaN/Inf in input");
        const std::uint16_t h = float_to_half_bits(v);
        if ((h & 0x7c00u) == 0x7c00u) throw InvariantError("half overflow: " + std::to_string(v));
        out.values.push_back(h);
    }
    return out;
}

std::vector<float> from_half(const HalfBlock& block) {
    std::vector<float> out;
    out.reserve(block.values.size());
    for (std::uint16_t h : block.values) out.push_back(half_bits_to_float(h));
    return out;
}

}  // namespace salicache
