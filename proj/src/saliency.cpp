#include "salicache/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "salicache/error.hpp"

namespace salicache {

void SaliencyConfig::validate() const {
    if (!(gaussian_sigma >= 0.0)) throw ConfigError("gaussian sigma must be >= 0");
    if (!(canny_low > 0.0 && canny_low < canny_high && canny_high <= 1.0))
        throw ConfigError("canny thresholds must satisfy 0 < low < high <= 1");
    if (variance_window < 3 || variance_window % 2 == 0) throw ConfigError("variance window must be odd and >= 3");
    if (!(edge_weight >= 0.0 && variance_weight >= 0.0) || std::abs(edge_weight + variance_weight - 1.0) > 1e-9)
        throw ConfigError("fusion weights must be non-negative and sum to 1");
    if (!(tau_low >= 0.0 && tau_low < tau_med && tau_med < tau_high && tau_high <= 1.0))
        throw ConfigError("tier thresholds must satisfy 0 <= tau_low < tau_med < tau_high <= 1");
}

std::string_view tier_name(Tier t) {
    switch (t) {
        case Tier::Prune: return "pruned";
        case Tier::Int4: return "int4";
        case Tier::Int8: return "int8";
        case Tier::Fp16: return "fp16";
        case Tier::Reused: return "reused";
    }
    return "?";
}

float Plane::clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
}

// ---------------------------------------------------------------------------
// Canny

Plane luma(const Frame& frame) {
    Plane out(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            out.at(x, y) = static_cast<float>(
                (0.299 * frame.at(x, y, 0) + 0.587 * frame.at(x, y, 1) + 0.114 * frame.at(x, y, 2)) / 255.0);
    return out;
}

Plane gaussian_blur(const Plane& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    Plane tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<std::size_t>(i + radius)] * src.clamped(x + i, y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    Plane out(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.clamped(x, y + i);
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

EdgeMap canny_edges(const Frame& frame, const SaliencyConfig& config) {
    config.validate();
    const Plane smooth = gaussian_blur(luma(frame), config.gaussian_sigma);
    const int w = smooth.width;
    const int h = smooth.height;

    Plane gx(w, h), gy(w, h), mag(w, h);
    float peak = 0.0f;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto p = [&](int dx, int dy) { return smooth.clamped(x + dx, y + dy); };
            const float sx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
            const float sy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
            gx.at(x, y) = sx;
            gy.at(x, y) = sy;
            mag.at(x, y) = std::hypot(sx, sy);
            peak = std::max(peak, mag.at(x, y));
        }
    }
    EdgeMap edges(w, h);
    if (peak <= 0.0f) return edges;
    for (float& m : mag.data) m /= peak;

    // Non-maximum suppression across the gradient direction, quantized to 4 bins.
    // A pixel survives if it is >= its forward neighbour and > its backward one,
    // so a symmetric two-pixel ridge keeps exactly one pixel.
    Plane thin(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float m = mag.at(x, y);
            if (m <= 0.0f) continue;
            double angle = std::atan2(gy.at(x, y), gx.at(x, y)) * 180.0 / std::numbers::pi;
            if (angle < 0) angle += 180.0;
            int dx = 0, dy = 0;
            if (angle < 22.5 || angle >= 157.5) {
                dx = 1;
            } else if (angle < 67.5) {
                dx = 1;
                dy = 1;
            } else if (angle < 112.5) {
                dy = 1;
            } else {
                dx = -1;
                dy = 1;
            }
            const float ahead = mag.clamped(x + dx, y + dy);
            const float behind = mag.clamped(x - dx, y - dy);
            if (m >= ahead && m > behind) thin.at(x, y) = m;
        }
    }

    // Double threshold + hysteresis, 8-connected.
    const auto low = static_cast<float>(config.canny_low);
    const auto high = static_cast<float>(config.canny_high);
    std::deque<std::pair<int, int>> frontier;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (thin.at(x, y) >= high) {
                edges.at(x, y) = 1.0f;
                frontier.emplace_back(x, y);
            }
    while (!frontier.empty()) {
        const auto [cx, cy] = frontier.front();
        frontier.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = cx + dx, ny = cy + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (edges.at(nx, ny) == 0.0f && thin.at(nx, ny) >= low) {
                    edges.at(nx, ny) = 1.0f;
                    frontier.emplace_back(nx, ny);
                }
            }
    }
    return edges;
}

// ---------------------------------------------------------------------------
// Colour

namespace {

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

const std::array<double, 256>& linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_to_linear(i / 255.0);
        return t;
    }();
    return table;
}

}  // namespace

std::array<double, 3> srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    // D65 reference white.
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    const auto& lin = linear_table();
    const double r = lin[r8], g = lin[g8], b = lin[b8];
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / xn), fy = lab_f(y / yn), fz = lab_f(z / zn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const Frame& frame) {
    LabImage lab{Plane(frame.width, frame.height), Plane(frame.width, frame.height), Plane(frame.width, frame.height)};
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            const auto v = srgb_to_lab(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2));
            lab.l.at(x, y) = static_cast<float>(v[0]);
            lab.a.at(x, y) = static_cast<float>(v[1]);
            lab.b.at(x, y) = static_cast<float>(v[2]);
        }
    return lab;
}

Plane chromatic_variance(const LabImage& lab, int window) {
    if (window < 3 || window % 2 == 0) throw ConfigError("variance window must be odd and >= 3");
    const int w = lab.a.width, h = lab.a.height;
    const int r = window / 2;
    const double n = static_cast<double>(window) * window;
    Plane out(w, h);
    double peak = 0.0;
    std::vector<double> raw(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double total = 0.0;
            for (const Plane* ch : {&lab.a, &lab.b}) {
                double mean = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) mean += ch->clamped(x + dx, y + dy);
                mean /= n;
                double ss = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double d = ch->clamped(x + dx, y + dy) - mean;
                        ss += d * d;
                    }
                total += ss / n;
            }
            raw[static_cast<std::size_t>(y) * w + x] = total;
            peak = std::max(peak, total);
        }
    }
    if (peak <= 0.0) return out;
    for (std::size_t i = 0; i < raw.size(); ++i) out.data[i] = static_cast<float>(raw[i] / peak);
    return out;
}

SaliencyMap fuse_saliency(const EdgeMap& edges, const Plane& variance, const SaliencyConfig& config) {
    if (edges.dims() != variance.dims()) throw ConfigError("fuse_saliency: map dimension mismatch");
    SaliencyMap out(edges.width, edges.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double s = config.edge_weight * edges.data[i] + config.variance_weight * variance.data[i];
        out.data[i] = static_cast<float>(std::clamp(s, 0.0, 1.0));
    }
    return out;
}

SaliencyMap compute_saliency(const Frame& frame, const SaliencyConfig& config) {
    config.validate();
    return fuse_saliency(canny_edges(frame, config), chromatic_variance(rgb_to_lab(frame), config.variance_window),
                         config);
}

std::vector<double> patch_saliency(const SaliencyMap& map, const PatchGrid& grid) {
    if (!grid.covers(map.dims())) throw ConfigError("patch_saliency: map does not match grid coverage");
    const int p = grid.patch_size;
    std::vector<double> scores(static_cast<std::size_t>(grid.patch_count()));
    for (int i = 0; i < grid.patch_count(); ++i) {
        const PatchRect r = grid.rect(i);
        double sum = 0.0;
        for (int y = r.y0; y < r.y0 + p; ++y)
            for (int x = r.x0; x < r.x0 + p; ++x) sum += map.at(x, y);
        scores[static_cast<std::size_t>(i)] = sum / (static_cast<double>(p) * p);
    }
    return scores;
}

Tier assign_tier(double score, const SaliencyConfig& config) {
    if (score > config.tau_high) return Tier::Fp16;
    if (score > config.tau_med) return Tier::Int8;
    if (score > config.tau_low) return Tier::Int4;
    return Tier::Prune;
}

}  // namespace salicache
