#include "salicache/frames.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "json.hpp"

#include "salicache/error.hpp"
#include "salicache/rng.hpp"

namespace salicache {

Frame make_frame(int width, int height, std::vector<std::uint8_t> pixels, int frame_index) {
    if (width <= 0 || height <= 0) throw ConfigError("frame dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
        throw InvariantError("pixel buffer length does not match width*height*3");
    if (frame_index < 0) throw ConfigError("frame index must be non-negative");
    return Frame{width, height, std::move(pixels), frame_index};
}

PatchGrid make_grid(const Dims& dims, int patch_size) {
    if (patch_size <= 0) throw ConfigError("patch size must be positive");
    if (dims.width <= 0 || dims.height <= 0) throw ConfigError("frame dimensions must be positive");
    if (dims.width % patch_size != 0 || dims.height % patch_size != 0) {
        std::ostringstream msg;
        msg << "dimensions not divisible by patch size: " << dims.width << "x" << dims.height << " with P="
            << patch_size << "; re-encode the input to a multiple of the patch size";
        throw ConfigError(msg.str());
    }
    return PatchGrid{patch_size, dims.height / patch_size, dims.width / patch_size};
}

// ---------------------------------------------------------------------------
// Manifest

FrameManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("patch_size") || !doc["patch_size"].is_number_integer() ||
        !doc.contains("frames") || !doc["frames"].is_array())
        throw IoError("malformed manifest " + path.string() + ": expected {\"patch_size\": int, \"frames\": [...]}");

    FrameManifest manifest;
    manifest.patch_size = doc["patch_size"].get<int>();
    if (manifest.patch_size <= 0) throw IoError("malformed manifest: patch_size must be positive");
    if (doc.contains("width") || doc.contains("height")) {
        if (!doc.value("width", nlohmann::json()).is_number_integer() ||
            !doc.value("height", nlohmann::json()).is_number_integer())
            throw IoError("malformed manifest: width and height must both be integers");
        manifest.dims = Dims{doc["width"].get<int>(), doc["height"].get<int>()};
    }
    const auto base = path.parent_path();
    for (const auto& entry : doc["frames"]) {
        if (!entry.is_string()) throw IoError("malformed manifest: frame entries must be strings");
        std::filesystem::path p = entry.get<std::string>();
        manifest.frames.push_back(p.is_absolute() ? p : base / p);
    }
    if (manifest.frames.empty()) throw IoError("empty frame list in manifest " + path.string());
    return manifest;
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::string_view data) : data_(data) {}

    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            const char c = data_[pos_];
            if (c == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int next_int(const char* field) {
        skip_space_and_comments();
        int value = 0;
        auto [ptr, ec] = std::from_chars(data_.data() + pos_, data_.data() + data_.size(), value);
        if (ec != std::errc() || ptr == data_.data() + pos_)
            throw IoError(std::string("malformed PPM header: bad ") + field);
        pos_ = static_cast<std::size_t>(ptr - data_.data());
        return value;
    }

    std::size_t pos() const { return pos_; }
    void advance() { ++pos_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace

Frame decode_ppm(std::string_view bytes, std::optional<Dims> expected, int frame_index) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw IoError("not a PPM file");
    if (bytes[1] != '6') throw IoError(std::string("unsupported PPM variant P") + bytes[1] + " (only P6 is accepted)");
    HeaderReader header(bytes.substr(2));
    const int width = header.next_int("width");
    const int height = header.next_int("height");
    const int maxval = header.next_int("maxval");
    if (width <= 0 || height <= 0) throw IoError("malformed PPM header: non-positive dimensions");
    if (maxval != 255) throw IoError("unsupported PPM maxval " + std::to_string(maxval) + " (only 255 is accepted)");
    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t offset = 2 + header.pos();
    if (offset >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[offset])))
        throw IoError("truncated pixel data");
    ++offset;
    if (expected && (expected->width != width || expected->height != height)) {
        std::ostringstream msg;
        msg << "dimension mismatch: expected " << expected->width << "x" << expected->height << ", got " << width
            << "x" << height;
        throw IoError(msg.str());
    }
    const std::size_t need = static_cast<std::size_t>(width) * height * 3;
    if (bytes.size() - offset < need) throw IoError("truncated pixel data");
    std::vector<std::uint8_t> pixels(need);
    std::memcpy(pixels.data(), bytes.data() + offset, need);
    return make_frame(width, height, std::move(pixels), frame_index);
}

Frame load_frame(const std::filesystem::path& path, std::optional<Dims> expected, int frame_index) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open frame: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_ppm(bytes, expected, frame_index);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const Frame& frame) {
    const std::string header = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
    return out;
}

void save_frame(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write frame: " + path.string());
    const auto bytes = encode_ppm(frame);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Frame> load_sequence(const FrameManifest& manifest) {
    std::vector<Frame> frames;
    frames.reserve(manifest.frames.size());
    std::optional<Dims> dims = manifest.dims;
    for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
        frames.push_back(load_frame(manifest.frames[i], dims, static_cast<int>(i)));
        if (!dims) dims = frames.back().dims();
    }
    make_grid(*dims, manifest.patch_size);
    return frames;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

Scenario parse_scenario(std::string_view name) {
    if (name == "static") return Scenario::Static;
    if (name == "moving_square") return Scenario::MovingSquare;
    if (name == "noise") return Scenario::Noise;
    if (name == "composite") return Scenario::Composite;
    throw ConfigError("unknown scenario: " + std::string(name));
}

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Static: return "static";
        case Scenario::MovingSquare: return "moving_square";
        case Scenario::Noise: return "noise";
        case Scenario::Composite: return "composite";
    }
    return "?";
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void put(std::vector<std::uint8_t>& px, int width, int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    px[i] = c[0];
    px[i + 1] = c[1];
    px[i + 2] = c[2];
}

// Four vertical bands of decreasing texture density, left to right:
// fine two-hue checker, coarse stripes, a faint low-contrast stripe, flat gray.
std::vector<std::uint8_t> textured_background(Dims d) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(d.width) * d.height * 3);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const int band = std::min(3, x * 4 / d.width);
            Rgb c{128, 128, 128};
            switch (band) {
                case 0: c = (((x / 4) + (y / 4)) % 2 == 0) ? Rgb{240, 200, 40} : Rgb{20, 30, 170}; break;
                case 1: c = ((x / 6) % 2 == 0) ? Rgb{240, 140, 30} : Rgb{20, 60, 160}; break;
                case 2: c = ((y / 8) % 2 == 0) ? Rgb{200, 150, 80} : Rgb{60, 100, 160}; break;
                default: break;
            }
            put(px, d.width, x, y, c);
        }
    }
    return px;
}

void draw_square(std::vector<std::uint8_t>& px, Dims d, int x0, int y0, int side, Rgb c) {
    for (int y = y0; y < std::min(d.height, y0 + side); ++y)
        for (int x = x0; x < std::min(d.width, x0 + side); ++x) put(px, d.width, x, y, c);
}

}  // namespace

std::vector<Frame> synth_sequence(Scenario scenario, int frame_count, Dims dims, int patch_size, std::uint64_t seed) {
    if (frame_count < 1) throw ConfigError("frame count must be at least 1");
    make_grid(dims, patch_size);

    const int side = std::max(4, std::min({patch_size / 2, dims.width / 2, dims.height / 2}));
    const int travel = std::max(1, dims.width - side + 1);
    const int start_x = static_cast<int>(splitmix64(seed) % static_cast<std::uint64_t>(travel));
    const int square_y = (dims.height - side) / 2;

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(frame_count));
    for (int t = 0; t < frame_count; ++t) {
        std::vector<std::uint8_t> px;
        switch (scenario) {
            case Scenario::Static:
                px = textured_background(dims);
                break;
            case Scenario::MovingSquare:
                px.assign(static_cast<std::size_t>(dims.width) * dims.height * 3, 40);
                draw_square(px, dims, (start_x + t) % travel, square_y, side, Rgb{240, 240, 240});
                break;
            case Scenario::Noise: {
                px.resize(static_cast<std::size_t>(dims.width) * dims.height * 3);
                std::mt19937_64 engine(splitmix64(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t + 1))));
                for (std::size_t i = 0; i < px.size(); i += 8) {
                    std::uint64_t bits = engine();
                    for (std::size_t k = 0; k < 8 && i + k < px.size(); ++k, bits >>= 8)
                        px[i + k] = static_cast<std::uint8_t>(bits & 0xff);
                }
                break;
            }
            case Scenario::Composite:
                // The square advances one pixel on odd frames and holds on even ones.
                px = textured_background(dims);
                draw_square(px, dims, (start_x + (t + 1) / 2) % travel, square_y, side, Rgb{250, 250, 20});
                break;
        }
        frames.push_back(make_frame(dims.width, dims.height, std::move(px), t));
    }
    return frames;
}

}  // namespace salicache
