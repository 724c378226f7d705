#include "scd/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace scd {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int channels = 0;
    std::vector<png_byte> pixels;  // rows packed, big-endian samples for 16 bit
};

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what) *what = msg;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

RawPng read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    RawPng raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path.string() + ": " + err);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    raw.bit_depth = png_get_bit_depth(png, info);
    raw.channels = png_get_channels(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) raw.channels = -1;
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.pixels.resize(stride * static_cast<std::size_t>(raw.height));
    rows.resize(static_cast<std::size_t>(raw.height));
    for (int r = 0; r < raw.height; ++r) rows[static_cast<std::size_t>(r)] = raw.pixels.data() + stride * static_cast<std::size_t>(r);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raw;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
               std::vector<png_byte>& pixels, std::size_t stride) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path.string());
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) rows[static_cast<std::size_t>(r)] = pixels.data() + stride * static_cast<std::size_t>(r);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": " + err);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image<std::uint16_t> read_gray16(const std::filesystem::path& path) {
    const RawPng raw = read_png(path);
    if (raw.channels != 1) throw ParseError(path.string() + ": expected a single-channel image");
    if (raw.bit_depth != 16) throw ParseError(path.string() + ": expected 16-bit samples");
    Image<std::uint16_t> out(raw.width, raw.height);
    const std::size_t stride = static_cast<std::size_t>(raw.width) * 2;
    for (int r = 0; r < raw.height; ++r) {
        const png_byte* row = raw.pixels.data() + stride * static_cast<std::size_t>(r);
        for (int c = 0; c < raw.width; ++c) {
            const std::size_t k = static_cast<std::size_t>(c) * 2;
            out.at(c, r) = static_cast<std::uint16_t>((row[k] << 8) | row[k + 1]);
        }
    }
    return out;
}

void write_gray16(const std::filesystem::path& path, const Image<std::uint16_t>& img) {
    const std::size_t stride = static_cast<std::size_t>(img.width()) * 2;
    std::vector<png_byte> pixels(stride * static_cast<std::size_t>(img.height()));
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const std::uint16_t v = img.at(c, r);
            const std::size_t k = stride * static_cast<std::size_t>(r) + static_cast<std::size_t>(c) * 2;
            pixels[k] = static_cast<png_byte>(v >> 8);
            pixels[k + 1] = static_cast<png_byte>(v & 0xFF);
        }
    }
    write_png(path, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY, pixels, stride);
}

}  // namespace

DepthImage load_depth(const std::filesystem::path& path, double scale) {
    if (!(scale > 0.0)) throw ValidationError("depth scale must be positive");
    const Image<std::uint16_t> raw = read_gray16(path);
    DepthImage depth(raw.width(), raw.height(), 0.0f);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        depth.data()[i] = static_cast<float>(raw.data()[i] * scale);
    }
    return depth;
}

void save_depth(const std::filesystem::path& path, const DepthImage& depth, double scale) {
    if (!(scale > 0.0)) throw ValidationError("depth scale must be positive");
    Image<std::uint16_t> raw(depth.width(), depth.height(), 0);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const float d = depth.data()[i];
        if (!valid_depth(d)) continue;
        const double units = std::round(d / scale);
        if (units > std::numeric_limits<std::uint16_t>::max()) {
            throw ValidationError("depth value exceeds 16-bit range at scale " + std::to_string(scale));
        }
        raw.data()[i] = static_cast<std::uint16_t>(units);
    }
    write_gray16(path, raw);
}

LabelImage load_labels(const std::filesystem::path& path) { return read_gray16(path); }

void save_labels(const std::filesystem::path& path, const LabelImage& labels) { write_gray16(path, labels); }

ColorImage load_color(const std::filesystem::path& path) {
    const RawPng raw = read_png(path);
    if (raw.channels != 3 || raw.bit_depth != 8) throw ParseError(path.string() + ": expected 8-bit RGB");
    ColorImage out(raw.width, raw.height);
    const std::size_t stride = static_cast<std::size_t>(raw.width) * 3;
    for (int r = 0; r < raw.height; ++r) {
        for (int c = 0; c < raw.width; ++c) {
            const png_byte* px = raw.pixels.data() + stride * static_cast<std::size_t>(r) + static_cast<std::size_t>(c) * 3;
            out.at(c, r) = {px[0], px[1], px[2]};
        }
    }
    return out;
}

void save_color(const std::filesystem::path& path, const ColorImage& color) {
    const std::size_t stride = static_cast<std::size_t>(color.width()) * 3;
    std::vector<png_byte> pixels(stride * static_cast<std::size_t>(color.height()));
    for (int r = 0; r < color.height(); ++r) {
        for (int c = 0; c < color.width(); ++c) {
            const Rgb8& px = color.at(c, r);
            const std::size_t k = stride * static_cast<std::size_t>(r) + static_cast<std::size_t>(c) * 3;
            pixels[k] = px[0];
            pixels[k + 1] = px[1];
            pixels[k + 2] = px[2];
        }
    }
    write_png(path, color.width(), color.height(), 8, PNG_COLOR_TYPE_RGB, pixels, stride);
}

}  // namespace scd
