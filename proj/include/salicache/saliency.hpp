#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "salicache/frames.hpp"

namespace salicache {

struct SaliencyConfig {
    double gaussian_sigma = 1.4;
    double canny_low = 0.10;   // fraction of the frame's peak gradient magnitude
    double canny_high = 0.25;
    int variance_window = 11;
    double edge_weight = 0.5;
    double variance_weight = 0.5;
    double tau_high = 0.60;
    double tau_med = 0.35;
    double tau_low = 0.15;

    void validate() const;
};

// Single-channel float image, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    // Replicate-edge access.
    float clamped(int x, int y) const;
    Dims dims() const { return {width, height}; }
};

using EdgeMap = Plane;      // values in {0, 1}
using SaliencyMap = Plane;  // values in [0, 1]

struct LabImage {
    Plane l, a, b;
};

// Storage tiers ordered by increasing precision; Reused is a store-level marker.
enum class Tier : std::uint8_t { Prune = 0, Int4 = 1, Int8 = 2, Fp16 = 3, Reused = 4 };

std::string_view tier_name(Tier t);

Plane luma(const Frame& frame);
Plane gaussian_blur(const Plane& src, double sigma);
EdgeMap canny_edges(const Frame& frame, const SaliencyConfig& config);

LabImage rgb_to_lab(const Frame& frame);
// Single-pixel conversion; returns {L, a, b}.
std::array<double, 3> srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

Plane chromatic_variance(const LabImage& lab, int window);
SaliencyMap fuse_saliency(const EdgeMap& edges, const Plane& variance, const SaliencyConfig& config);
SaliencyMap compute_saliency(const Frame& frame, const SaliencyConfig& config);

std::vector<double> patch_saliency(const SaliencyMap& map, const PatchGrid& grid);
Tier assign_tier(double score, const SaliencyConfig& config);

}  // namespace salicache
