#pragma once

#include <cstdint>

namespace salicache {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based generator; output depends only on (seed, draw count), not on
// any standard-library distribution implementation.
class SeededStream {
public:
    explicit SeededStream(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return splitmix64(state_);
    }
    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Uniform in [-1, 1).
    double next_signed() { return 2.0 * next_unit() - 1.0; }

private:
    std::uint64_t state_;
};

}  // namespace salicache
