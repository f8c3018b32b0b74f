// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "endopbr/common.hpp"

namespace endopbr {

/// Dense row-major image with interleaved channels.
template <typename T>
class Image {
  public:
    Image() = default;
    Image(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using DepthMap = Image<Real>;     // meters, 0 = no measurement
using RgbImage8 = Image<std::uint8_t>;
using RgbImageF = Image<Real>;    // linear values, nominally [0,1]
using Mask = Image<std::uint8_t>;

inline RgbImageF to_float(const RgbImage8& img) {
    RgbImageF out(img.width(), img.height(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = Real(src[i]) / Real(255);
    return out;
}

inline RgbImage8 to_8bit(const RgbImageF& img) {
    RgbImage8 out(img.width(), img.height(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = static_cast<std::uint8_t>(std::lround(clamp01(src[i]) * 255.0));
    return out;
}

}  // namespace endopbr
