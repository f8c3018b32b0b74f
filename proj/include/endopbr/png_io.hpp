// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "endopbr/image.hpp"

namespace endopbr {

using Gray16Image = Image<std::uint16_t>;

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw Error(ErrorKind::Load, "cannot open " + path.string());
    return f;
}

// bit_depth 8 with 3 channels or 16 with 1 channel; samples are host-order.
inline void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
                      const void* pixels) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::Load, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::Load, "failed to encode " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    const std::size_t row_bytes = std::size_t(width) * channels * (bit_depth / 8);
    auto* base = static_cast<const png_byte*>(pixels);
    for (int y = 0; y < height; ++y) png_write_row(png, base + y * row_bytes);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

template <typename T>
Image<T> read_png(const std::filesystem::path& path, int channels) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Load, "libpng initialization failed");
    }
    Image<T> img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Load, "failed to decode " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int width = int(png_get_image_width(png, info)), height = int(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info), depth = png_get_bit_depth(png, info);
    constexpr int want_depth = sizeof(T) * 8;

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want_depth == 8 && depth == 16) png_set_strip_16(png);
    if (want_depth == 16 && depth < 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Load, path.string() + " is not a 16-bit image");
    }
    const bool is_gray = !(color & PNG_COLOR_MASK_COLOR) && color != PNG_COLOR_TYPE_PALETTE;
    if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
    if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (want_depth == 16) png_set_swap(png);
    png_read_update_info(png, info);

    img = Image<T>(width, height, channels);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    if (row_bytes != std::size_t(width) * channels * sizeof(T)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Load, "unexpected pixel layout in " + path.string());
    }
    auto* base = reinterpret_cast<png_byte*>(img.data().data());
    for (int y = 0; y < height; ++y) png_read_row(png, base + y * row_bytes, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace detail

inline void write_png_rgb8(const std::filesystem::path& path, const RgbImage8& img) {
    if (img.channels() != 3) throw Error(ErrorKind::Config, "RGB image must have 3 channels");
    detail::write_png(path, img.width(), img.height(), 3, 8, img.data().data());
}

inline RgbImage8 read_png_rgb8(const std::filesystem::path& path) { return detail::read_png<std::uint8_t>(path, 3); }

inline void write_png_gray16(const std::filesystem::path& path, const Gray16Image& img) {
    if (img.channels() != 1) throw Error(ErrorKind::Config, "depth image must have 1 channel");
    detail::write_png(path, img.width(), img.height(), 1, 16, img.data().data());
}

inline Gray16Image read_png_gray16(const std::filesystem::path& path) {
    return detail::read_png<std::uint16_t>(path, 1);
}

}  // namespace endopbr
