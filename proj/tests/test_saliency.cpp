#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "salicache/error.hpp"
#include "salicache/saliency.hpp"

using namespace salicache;

namespace {

Frame paint(int w, int h, auto&& colour) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::array<std::uint8_t, 3> c = colour(x, y);
            for (int k = 0; k < 3; ++k) px[(static_cast<std::size_t>(y) * w + x) * 3 + k] = c[static_cast<std::size_t>(k)];
        }
    return make_frame(w, h, std::move(px));
}

using Rgb = std::array<std::uint8_t, 3>;

double edge_count(const EdgeMap& e) {
    double n = 0;
    for (float v : e.data) n += v;
    return n;
}

// Windowed var(a)+var(b) with replicated borders, computed from scratch.
std::vector<double> variance_oracle(const LabImage& lab, int window) {
    const int w = lab.a.width, h = lab.a.height, r = window / 2;
    std::vector<double> raw(static_cast<std::size_t>(w) * h);
    double peak = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double total = 0;
            for (const Plane* ch : {&lab.a, &lab.b}) {
                double s = 0, s2 = 0;
                for (int yy = y - r; yy <= y + r; ++yy)
                    for (int xx = x - r; xx <= x + r; ++xx) {
                        const double v = ch->at(std::clamp(xx, 0, w - 1), std::clamp(yy, 0, h - 1));
                        s += v;
                        s2 += v * v;
                    }
                const double n = static_cast<double>(window) * window;
                total += std::max(0.0, s2 / n - (s / n) * (s / n));
            }
            raw[static_cast<std::size_t>(y) * w + x] = total;
            peak = std::max(peak, total);
        }
    for (double& v : raw) v = peak > 0 ? v / peak : 0.0;
    return raw;
}

}  // namespace

TEST_CASE("SaliencyConfig validation") {
    SaliencyConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.canny_low = 0.3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.edge_weight = 0.7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.tau_med = bad.tau_high;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.variance_window = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("canny_edges") {
    const SaliencyConfig cfg;
    SUBCASE("uniform frame has no edges") {
        const auto e = canny_edges(paint(32, 32, [](int, int) { return Rgb{90, 90, 90}; }), cfg);
        CHECK(edge_count(e) == 0);
    }
    SUBCASE("vertical step edge gives one vertical line at the boundary") {
        // Reference (skimage canny, sigma 1.4) marks columns 15/16 for a step at x=16.
        const auto e = canny_edges(paint(32, 32, [](int x, int) { return x < 16 ? Rgb{0, 0, 0} : Rgb{255, 255, 255}; }), cfg);
        int column = -1;
        for (int y = 2; y < 30; ++y) {
            int in_row = 0;
            for (int x = 0; x < 32; ++x)
                if (e.at(x, y) != 0.0f) {
                    ++in_row;
                    if (column < 0) column = x;
                    CHECK(x == column);
                }
            CHECK(in_row == 1);
        }
        CHECK((column == 15 || column == 16));
    }
    SUBCASE("1-px checkerboard is annihilated by the blur, as in reference implementations") {
        const auto e = canny_edges(paint(64, 64, [](int x, int y) { return (x + y) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0}; }), cfg);
        for (int y = 4; y < 60; ++y)
            for (int x = 4; x < 60; ++x) CHECK(e.at(x, y) == 0.0f);
    }
    SUBCASE("4-px checkerboard is edge dense") {
        const auto e = canny_edges(
            paint(64, 64, [](int x, int y) { return (x / 4 + y / 4) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0}; }), cfg);
        CHECK(edge_count(e) / (64.0 * 64.0) > 0.2);
    }
    SUBCASE("output is binary") {
        std::mt19937 rng(5);
        const auto e = canny_edges(paint(40, 24, [&](int, int) { return Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())}; }), cfg);
        for (float v : e.data) CHECK((v == 0.0f || v == 1.0f));
    }
}

TEST_CASE("srgb_to_lab reference values") {
    const auto white = srgb_to_lab(255, 255, 255);
    CHECK(std::abs(white[0] - 100.0) < 0.01);
    CHECK(std::abs(white[1]) < 0.01);
    CHECK(std::abs(white[2]) < 0.01);
    const auto black = srgb_to_lab(0, 0, 0);
    for (double v : black) CHECK(std::abs(v) < 1e-9);
    // skimage.color.rgb2lab([1, 0, 0]) = (53.2406, 80.0923, 67.2028)
    const auto red = srgb_to_lab(255, 0, 0);
    CHECK(std::abs(red[0] - 53.24) < 0.05);
    CHECK(std::abs(red[1] - 80.09) < 0.05);
    CHECK(std::abs(red[2] - 67.20) < 0.05);
    // skimage.color.rgb2lab([0, 0, 1]) = (32.2957, 79.1856, -107.8573)
    const auto blue = srgb_to_lab(0, 0, 255);
    CHECK(std::abs(blue[0] - 32.2957) < 0.05);
    CHECK(std::abs(blue[1] - 79.1856) < 0.05);
    CHECK(std::abs(blue[2] + 107.8573) < 0.05);
}

TEST_CASE("chromatic_variance") {
    SUBCASE("uniform colour is all zero") {
        const auto v = chromatic_variance(rgb_to_lab(paint(20, 20, [](int, int) { return Rgb{10, 200, 50}; })), 11);
        for (float x : v.data) CHECK(x == 0.0f);
    }
    SUBCASE("two hues: matches brute force and peaks at the boundary") {
        const Frame f = paint(40, 20, [](int x, int) { return x < 20 ? Rgb{220, 30, 30} : Rgb{30, 200, 40}; });
        const LabImage lab = rgb_to_lab(f);
        const auto v = chromatic_variance(lab, 5);
        const auto oracle = variance_oracle(lab, 5);
        float peak = 0;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(v.data[i] == doctest::Approx(oracle[i]).epsilon(1e-4).scale(1));
            peak = std::max(peak, v.data[i]);
        }
        CHECK(peak == 1.0f);
        for (int y = 0; y < 20; ++y) {
            CHECK(v.at(19, y) == 1.0f);
            CHECK(v.at(20, y) == 1.0f);
            CHECK(v.at(2, y) == 0.0f);   // window fully inside one hue
            CHECK(v.at(37, y) == 0.0f);
        }
    }
    SUBCASE("any non-constant frame normalizes to a maximum of exactly 1") {
        std::mt19937 rng(8);
        for (int t = 0; t < 5; ++t) {
            const auto v = chromatic_variance(
                rgb_to_lab(paint(16, 16, [&](int, int) { return Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())}; })), 3);
            CHECK(*std::max_element(v.data.begin(), v.data.end()) == 1.0f);
        }
    }
    SUBCASE("window validation") {
        const LabImage lab = rgb_to_lab(paint(8, 8, [](int, int) { return Rgb{1, 2, 3}; }));
        CHECK_THROWS_AS(chromatic_variance(lab, 4), ConfigError);
        CHECK_THROWS_AS(chromatic_variance(lab, 1), ConfigError);
    }
}

TEST_CASE("fuse_saliency") {
    SaliencyConfig cfg;
    Plane edges(2, 1), var(2, 1);
    SUBCASE("zeros") {
        for (float v : fuse_saliency(edges, var, cfg).data) CHECK(v == 0.0f);
    }
    SUBCASE("weighted sum") {
        edges.data = {1.0f, 1.0f};
        var.data = {1.0f, 0.0f};
        const auto s = fuse_saliency(edges, var, cfg);
        CHECK(s.data[0] == 1.0f);
        CHECK(s.data[1] == 0.5f);
    }
    SUBCASE("dimension mismatch") { CHECK_THROWS_AS(fuse_saliency(Plane(2, 2), Plane(2, 1), cfg), ConfigError); }
}

TEST_CASE("patch_saliency") {
    const PatchGrid g = make_grid(Dims{32, 16}, 16);
    SaliencyMap m(32, 16);
    for (double s : patch_saliency(m, g)) CHECK(s == 0.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) m.at(x, y) = 1.0f;  // 64 of 256 pixels in patch 0
    const auto s = patch_saliency(m, g);
    CHECK(s[0] == 0.25);
    CHECK(s[1] == 0.0);
    std::fill(m.data.begin(), m.data.end(), 0.375f);
    for (double v : patch_saliency(m, g)) CHECK(v == doctest::Approx(0.375));
    CHECK_THROWS_AS(patch_saliency(SaliencyMap(16, 16), g), ConfigError);
}

TEST_CASE("assign_tier") {
    SaliencyConfig cfg;
    cfg.tau_high = 0.8;
    cfg.tau_med = 0.5;
    cfg.tau_low = 0.2;
    CHECK(assign_tier(0.9, cfg) == Tier::Fp16);
    CHECK(assign_tier(0.8, cfg) == Tier::Int8);
    CHECK(assign_tier(0.5, cfg) == Tier::Int4);
    CHECK(assign_tier(0.2, cfg) == Tier::Prune);
    CHECK(assign_tier(0.0, cfg) == Tier::Prune);

    SUBCASE("monotone over a dense sweep, one tier per score") {
        Tier previous = Tier::Prune;
        for (int i = 0; i <= 10000; ++i) {
            const double s = i / 10000.0;
            const Tier t = assign_tier(s, cfg);
            CHECK(static_cast<int>(t) >= static_cast<int>(previous));
            CHECK(t != Tier::Reused);
            previous = t;
        }
    }
    SUBCASE("tau_low = 0 still prunes a zero score") {
        cfg.tau_low = 0.0;
        CHECK(assign_tier(0.0, cfg) == Tier::Prune);
    }
}

TEST_CASE("uniform frame: zero saliency and every patch pruned") {
    const Frame f = paint(64, 64, [](int, int) { return Rgb{200, 10, 10}; });
    const SaliencyConfig cfg;
    const auto s = compute_saliency(f, cfg);
    for (float v : s.data) CHECK(v == 0.0f);
    for (double p : patch_saliency(s, make_grid(f, 16))) CHECK(assign_tier(p, cfg) == Tier::Prune);
}

TEST_CASE("saliency map is bounded") {
    std::mt19937 rng(17);
    const Frame f = paint(48, 48, [&](int, int) { return Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())}; });
    const auto s = compute_saliency(f, SaliencyConfig{});
    for (float v : s.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    // Pure function of inputs.
    CHECK(compute_saliency(f, SaliencyConfig{}).data == s.data);
}
