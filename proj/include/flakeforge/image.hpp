#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "flakeforge/color.hpp"

namespace flakeforge {

// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct Image8 {
    int width = 0, height = 0, channels = 0;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c) : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, 0) {}
    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Linear-RGB working image (double per channel).
struct ImageF {
    int width = 0, height = 0;
    std::vector<Rgb> pixels;

    ImageF() = default;
    ImageF(int w, int h, Rgb fill = {}) : width(w), height(h),
        pixels(static_cast<std::size_t>(w) * h, fill) {}
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool empty() const { return pixels.empty(); }
};

// PNG I/O. Reading accepts 8/16-bit gray, palette, RGB and RGBA and always
// returns 8-bit RGB; writing emits 8-bit RGB or grayscale.
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

// Atomic variant: writes to a temp file in the same directory, then renames.
void write_png_atomic(const std::filesystem::path& path, const Image8& image);

// 8-bit sRGB <-> linear RGB boundary conversions.
ImageF decode_srgb_image(const Image8& image);
Image8 encode_srgb_image(const ImageF& image);

// Per-channel median over all pixels (lower median for even counts).
Rgb estimate_background(const ImageF& image);

// Per-pixel white balance (multiply then clip), same as the color overload.
ImageF apply_wb(const ImageF& image, const WbGain& gain);

} // namespace flakeforge
