#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap::png {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

inline File open(const std::filesystem::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError(std::string("cannot open '") + path.string() + "'");
    return f;
}

struct Decoded {
    std::size_t rows = 0, cols = 0;
    int color_type = 0;
    int bit_depth = 0;
    int interlace = 0;
    std::vector<std::uint8_t> pixels;  // only filled for 8-bit gray / RGB
};

// Reads the header always; decodes pixels only for 8-bit gray or RGB.
inline Decoded decode(const std::filesystem::path& path) {
    auto file = open(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw UnsupportedFormat("'" + path.string() + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    Decoded out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG data in '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    out.cols = png_get_image_width(png, info);
    out.rows = png_get_image_height(png, info);
    out.color_type = png_get_color_type(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    out.interlace = png_get_interlace_type(png, info);

    const bool supported = out.bit_depth == 8 && out.interlace == PNG_INTERLACE_NONE &&
                           (out.color_type == PNG_COLOR_TYPE_GRAY || out.color_type == PNG_COLOR_TYPE_RGB);
    if (supported) {
        const std::size_t channels = out.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
        out.pixels.resize(out.rows * out.cols * channels);
        rows.resize(out.rows);
        for (std::size_t r = 0; r < out.rows; ++r) rows[r] = out.pixels.data() + r * out.cols * channels;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline void encode(const std::filesystem::path& path, std::size_t rows, std::size_t cols, int color_type,
                   const std::vector<std::uint8_t>& pixels) {
    auto file = open(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    std::vector<png_bytep> row_ptrs(rows);
    for (std::size_t r = 0; r < rows; ++r)
        row_ptrs[r] = const_cast<png_bytep>(pixels.data() + r * cols * channels);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void require_gray8(const Decoded& d, const std::filesystem::path& path) {
    if (d.color_type != PNG_COLOR_TYPE_GRAY || d.bit_depth != 8 || d.interlace != PNG_INTERLACE_NONE)
        throw UnsupportedFormat("'" + path.string() + "': need 8-bit non-interlaced grayscale (color type " +
                                std::to_string(d.color_type) + ", depth " + std::to_string(d.bit_depth) + ")");
}

}  // namespace detail

/// 8-bit grayscale image as raw bytes.
inline Grid<std::uint8_t> read_gray_png(const std::filesystem::path& path) {
    auto d = detail::decode(path);
    detail::require_gray8(d, path);
    return Grid<std::uint8_t>(d.rows, d.cols, std::move(d.pixels));
}

/// Strict mask reader: 0 is background, 255 foreground, anything else rejected.
inline BinaryMask read_mask_png(const std::filesystem::path& path) {
    const auto gray = read_gray_png(path);
    Grid<std::uint8_t> bits(gray.rows(), gray.cols());
    for (std::size_t r = 0; r < gray.rows(); ++r)
        for (std::size_t c = 0; c < gray.cols(); ++c) {
            const auto v = gray(r, c);
            if (v != 0 && v != 255) throw InvalidMask(r, c, v);
            bits(r, c) = v == 255 ? 1 : 0;
        }
    return BinaryMask(std::move(bits));
}

inline RgbImage read_rgb_png(const std::filesystem::path& path) {
    auto d = detail::decode(path);
    if (d.color_type != PNG_COLOR_TYPE_RGB || d.bit_depth != 8 || d.interlace != PNG_INTERLACE_NONE)
        throw UnsupportedFormat("'" + path.string() + "': need 8-bit non-interlaced RGB");
    return RgbImage{d.rows, d.cols, std::move(d.pixels)};
}

inline void write_gray_png(const std::filesystem::path& path, const Grid<std::uint8_t>& gray) {
    if (gray.empty()) throw InvalidInput("cannot write an empty image");
    detail::encode(path, gray.rows(), gray.cols(), PNG_COLOR_TYPE_GRAY, gray.data());
}

inline void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    Grid<std::uint8_t> gray(mask.rows(), mask.cols());
    for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? 255 : 0;
    write_gray_png(path, gray);
}

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& rgb) {
    if (rgb.rows == 0 || rgb.cols == 0 || rgb.data.size() != rgb.rows * rgb.cols * 3)
        throw InvalidInput("malformed RGB image");
    detail::encode(path, rgb.rows, rgb.cols, PNG_COLOR_TYPE_RGB, rgb.data);
}

}  // namespace locmap::png
