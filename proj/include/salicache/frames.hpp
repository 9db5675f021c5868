#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace salicache {

struct Dims {
    int width = 0;
    int height = 0;
    bool operator==(const Dims&) const = default;
};

// Row-major interleaved RGB, 8 bits per channel. Immutable once built.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    int frame_index = 0;

    Dims dims() const { return {width, height}; }
    std::uint8_t at(int x, int y, int channel) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
    }
    // Channel value scaled to [0,1].
    float unit(int x, int y, int channel) const { return at(x, y, channel) / 255.0f; }
};

// Validates the pixel buffer length and returns the frame.
Frame make_frame(int width, int height, std::vector<std::uint8_t> pixels, int frame_index = 0);

struct PatchRect {
    int x0, y0;  // top-left pixel
    int size;
};

struct PatchGrid {
    int patch_size = 0;
    int rows = 0;
    int cols = 0;

    int patch_count() const { return rows * cols; }
    // Patch i (row-major) covers [col*P, col*P+P) x [row*P, row*P+P).
    PatchRect rect(int patch) const {
        return {(patch % cols) * patch_size, (patch / cols) * patch_size, patch_size};
    }
    bool covers(const Dims& d) const { return d.width == cols * patch_size && d.height == rows * patch_size; }
};

PatchGrid make_grid(const Dims& dims, int patch_size);
inline PatchGrid make_grid(const Frame& frame, int patch_size) { return make_grid(frame.dims(), patch_size); }

struct FrameManifest {
    std::vector<std::filesystem::path> frames;  // already resolved against the manifest directory
    int patch_size = 0;
    std::optional<Dims> dims;
};

FrameManifest load_manifest(const std::filesystem::path& path);

// Binary PPM (P6, maxval 255) only.
Frame load_frame(const std::filesystem::path& path, std::optional<Dims> expected = std::nullopt, int frame_index = 0);
void save_frame(const Frame& frame, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Frame& frame);
Frame decode_ppm(std::string_view bytes, std::optional<Dims> expected = std::nullopt, int frame_index = 0);

// Loads every frame listed in the manifest, in manifest order, checking that all
// share the first frame's dimensions (or the declared ones).
std::vector<Frame> load_sequence(const FrameManifest& manifest);

enum class Scenario { Static, MovingSquare, Noise, Composite };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario s);

std::vector<Frame> synth_sequence(Scenario scenario, int frame_count, Dims dims, int patch_size, std::uint64_t seed);

}  // namespace salicache
