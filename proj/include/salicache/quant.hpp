#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace salicache {

// Symmetric INT8: code = round_half_even(x / scale), scale = max|x| / 127.
// The block stores max|x| and derives scale from it so that the extremum
// reconstructs exactly.
struct QuantBlockInt8 {
    float abs_max = 0.0f;
    std::vector<std::int8_t> values;

    float scale() const { return abs_max / 127.0f; }
};

// Asymmetric INT4 in min/scale affine form, two codes per byte, low nibble first.
// The block stores its min (offset) and max; scale = (max - min) / 15.
struct QuantBlockInt4 {
    float offset = 0.0f;
    float top = 0.0f;
    std::vector<std::uint8_t> packed;
    std::size_t element_count = 0;

    float scale() const { return static_cast<float>((static_cast<double>(top) - offset) / 15.0); }
    std::uint8_t code(std::size_t i) const {
        const std::uint8_t byte = packed[i / 2];
        return (i % 2 == 0) ? (byte & 0x0f) : (byte >> 4);
    }
};

struct HalfBlock {
    std::vector<std::uint16_t> values;  // IEEE 754 binary16 bit patterns
};

QuantBlockInt8 quantize_int8(std::span<const float> block);
std::vector<float> dequantize_int8(const QuantBlockInt8& block);

QuantBlockInt4 quantize_int4(std::span<const float> block);
std::vector<float> dequantize_int4(const QuantBlockInt4& block);

std::uint16_t float_to_half_bits(float value);
float half_bits_to_float(std::uint16_t bits);
HalfBlock to_half(std::span<const float> block);
std::vector<float> from_half(const HalfBlock& block);

// Round half to even, independent of the current floating-point environment.
double round_half_even(double x);

// Storage cost of one quantized block of `length` elements.
struct BlockBytes {
    std::size_t payload = 0;
    std::size_t metadata = 0;
};
constexpr std::size_t kInt8Metadata = 4;  // one float
constexpr std::size_t kInt4Metadata = 8;  // two floats
inline BlockBytes fp16_bytes(std::size_t length) { return {2 * length, 0}; }
inline BlockBytes int8_bytes(std::size_t length) { return {length, kInt8Metadata}; }
inline BlockBytes int4_bytes(std::size_t length) { return {(length + 1) / 2, kInt4Metadata}; }

}  // namespace salicache
