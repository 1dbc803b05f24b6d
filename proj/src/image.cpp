#include "flakeforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "flakeforge/error.hpp"

namespace flakeforge {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image8 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw IoError(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": PNG decode error");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // normalize everything to 8-bit RGB
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    Image8 img(static_cast<int>(png_get_image_width(png, info)),
               static_cast<int>(png_get_image_height(png, info)), 3);
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": unexpected row size after conversion");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] = img.data.data() + static_cast<std::size_t>(y) * img.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
    if (image.channels != 1 && image.channels != 3)
        throw DomainError("write_png: only 1- or 3-channel images supported");
    if (image.width <= 0 || image.height <= 0)
        throw DomainError("write_png: empty image");

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": PNG encode error");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
    const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
    for (int y = 0; y < image.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(image.data.data()) + static_cast<std::size_t>(y) * stride;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png_atomic(const std::filesystem::path& path, const Image8& image) {
    auto tmp = path;
    tmp += ".tmp";
    write_png(tmp, image);
    std::filesystem::rename(tmp, path);
}

ImageF decode_srgb_image(const Image8& image) {
    if (image.channels != 3) throw DomainError("decode_srgb_image: expected RGB input");
    ImageF out(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            out.at(x, y) = {srgb_decode_channel(image.at(x, y, 0)),
                            srgb_decode_channel(image.at(x, y, 1)),
                            srgb_decode_channel(image.at(x, y, 2))};
    return out;
}

Image8 encode_srgb_image(const ImageF& image) {
    Image8 out(image.width, image.height, 3);
    auto quantize = [](double linear) {
        const double v = std::lround(srgb_encode_channel(std::clamp(linear, 0.0, 1.0)));
        return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    };
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const Rgb& p = image.at(x, y);
            out.at(x, y, 0) = quantize(p.r);
            out.at(x, y, 1) = quantize(p.g);
            out.at(x, y, 2) = quantize(p.b);
        }
    return out;
}

Rgb estimate_background(const ImageF& image) {
    if (image.empty()) throw DomainError("estimate_background: empty image");
    const std::size_t n = image.pixels.size();
    const std::size_t mid = (n - 1) / 2;  // lower median
    std::vector<double> channel(n);
    Rgb bg;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) channel[i] = image.pixels[i][c];
        std::nth_element(channel.begin(), channel.begin() + static_cast<std::ptrdiff_t>(mid),
                         channel.end());
        bg[c] = channel[mid];
    }
    return bg;
}

ImageF apply_wb(const ImageF& image, const WbGain& gain) {
    ImageF out(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        out.pixels[i] = apply_wb(image.pixels[i], gain);
    return out;
}

} // namespace flakeforge
