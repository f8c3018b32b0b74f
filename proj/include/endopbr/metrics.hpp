// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "endopbr/image.hpp"
#include "endopbr/serialize.hpp"

namespace endopbr {

inline constexpr Real kPsnrCap = 100;

namespace detail {

inline void check_metric_inputs(const RgbImageF& pred, const RgbImageF& gt, const Mask& mask) {
    if (!pred.same_shape(gt)) throw Error(ErrorKind::Config, "metric inputs differ in shape");
    if (mask.width() != pred.width() || mask.height() != pred.height())
        throw Error(ErrorKind::Config, "metric mask does not match image shape");
    bool any = false;
    for (auto v : mask.data()) any = any || v;
    if (!any) throw Error(ErrorKind::EmptyBatch, "metric mask selects no pixels");
}

}  // namespace detail

inline Mask full_mask(const RgbImageF& img) { return Mask(img.width(), img.height(), 1, 1); }

/// 10 log10(1 / MSE) over masked pixels and all channels, capped at 100 dB.
inline Real psnr(const RgbImageF& pred, const RgbImageF& gt, const Mask& mask) {
    detail::check_metric_inputs(pred, gt, mask);
    Real sum = 0;
    std::size_t count = 0;
    for (int j = 0; j < pred.height(); ++j)
        for (int i = 0; i < pred.width(); ++i) {
            if (!mask.at(i, j)) continue;
            for (int c = 0; c < pred.channels(); ++c) {
                const Real d = pred.at(i, j, c) - gt.at(i, j, c);
                sum += d * d;
                ++count;
            }
        }
    const Real mse = sum / Real(count);
    if (mse <= 0) return kPsnrCap;
    return std::min(kPsnrCap, 10 * std::log10(1 / mse));
}

inline Real psnr(const RgbImageF& pred, const RgbImageF& gt) { return psnr(pred, gt, full_mask(pred)); }

inline constexpr int kSsimRadius = 5;  // 11x11 window
inline constexpr Real kSsimSigma = 1.5;
inline constexpr Real kSsimC1 = 0.01 * 0.01;
inline constexpr Real kSsimC2 = 0.03 * 0.03;

inline std::array<Real, 2 * kSsimRadius + 1> ssim_kernel() {
    std::array<Real, 2 * kSsimRadius + 1> k{};
    Real sum = 0;
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i) sum += k[i + kSsimRadius] = std::exp(-(i * i) / (2 * kSsimSigma * kSsimSigma));
    for (auto& v : k) v /= sum;
    return k;
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) on unit dynamic
/// range, per channel then averaged. Only windows lying entirely on masked
/// pixels contribute.
inline Real ssim(const RgbImageF& pred, const RgbImageF& gt, const Mask& mask) {
    detail::check_metric_inputs(pred, gt, mask);
    const int w = pred.width(), h = pred.height(), R = kSsimRadius;
    const auto kernel = ssim_kernel();

    // windows fully inside the image and the mask, via a summed-area table of invalid pixels
    std::vector<int> bad((w + 1) * (h + 1), 0);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            bad[(j + 1) * (w + 1) + i + 1] = (mask.at(i, j) ? 0 : 1) + bad[j * (w + 1) + i + 1] +
                                             bad[(j + 1) * (w + 1) + i] - bad[j * (w + 1) + i];
    auto window_ok = [&](int i, int j) {
        if (i - R < 0 || j - R < 0 || i + R >= w || j + R >= h) return false;
        const int x0 = i - R, y0 = j - R, x1 = i + R + 1, y1 = j + R + 1;
        return bad[y1 * (w + 1) + x1] - bad[y0 * (w + 1) + x1] - bad[y1 * (w + 1) + x0] + bad[y0 * (w + 1) + x0] == 0;
    };

    auto blur = [&](const std::vector<Real>& src) {
        std::vector<Real> tmp(src.size(), 0), out(src.size(), 0);
        for (int j = 0; j < h; ++j)
            for (int i = R; i + R < w; ++i) {
                Real acc = 0;
                for (int d = -R; d <= R; ++d) acc += kernel[d + R] * src[j * w + i + d];
                tmp[j * w + i] = acc;
            }
        for (int j = R; j + R < h; ++j)
            for (int i = 0; i < w; ++i) {
                Real acc = 0;
                for (int d = -R; d <= R; ++d) acc += kernel[d + R] * tmp[(j + d) * w + i];
                out[j * w + i] = acc;
            }
        return out;
    };

    Real total = 0;
    std::size_t windows = 0;
    const std::size_t n = std::size_t(w) * h;
    for (int c = 0; c < pred.channels(); ++c) {
        std::vector<Real> x(n), y(n), xx(n), yy(n), xy(n);
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                const std::size_t k = std::size_t(j) * w + i;
                x[k] = pred.at(i, j, c);
                y[k] = gt.at(i, j, c);
                xx[k] = x[k] * x[k];
                yy[k] = y[k] * y[k];
                xy[k] = x[k] * y[k];
            }
        const auto mx = blur(x), my = blur(y), mxx = blur(xx), myy = blur(yy), mxy = blur(xy);
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                if (!window_ok(i, j)) continue;
                const std::size_t k = std::size_t(j) * w + i;
                const Real vx = mxx[k] - mx[k] * mx[k], vy = myy[k] - my[k] * my[k], cxy = mxy[k] - mx[k] * my[k];
                total += ((2 * mx[k] * my[k] + kSsimC1) * (2 * cxy + kSsimC2)) /
                         ((mx[k] * mx[k] + my[k] * my[k] + kSsimC1) * (vx + vy + kSsimC2));
                ++windows;
            }
    }
    if (windows == 0) throw Error(ErrorKind::EmptyBatch, "no complete SSIM window inside the mask");
    return total / Real(windows);
}

inline Real ssim(const RgbImageF& pred, const RgbImageF& gt) { return ssim(pred, gt, full_mask(pred)); }

struct FrameMetrics {
    int frame_id = 0;
    Real psnr = 0;
    Real ssim = 0;
};

struct EvalReport {
    std::vector<FrameMetrics> frames;

    Real mean_psnr() const { return mean(&FrameMetrics::psnr); }
    Real mean_ssim() const { return mean(&FrameMetrics::ssim); }

    json to_json() const {
        json rows = json::array();
        for (const auto& f : frames) rows.push_back({{"frame_id", f.frame_id}, {"psnr", f.psnr}, {"ssim", f.ssim}});
        return {{"frames", rows}, {"mean_psnr", mean_psnr()}, {"mean_ssim", mean_ssim()}};
    }

    void write(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) const {
        std::ofstream csv(csv_path);
        csv << "frame_id,psnr,ssim\n";
        csv.precision(10);
        for (const auto& f : frames) csv << f.frame_id << ',' << f.psnr << ',' << f.ssim << '\n';
        csv << "mean," << mean_psnr() << ',' << mean_ssim() << '\n';
        std::ofstream(json_path) << to_json().dump(2) << '\n';
        if (!csv) throw Error(ErrorKind::Load, "failed to write " + csv_path.string());
    }

  private:
    Real mean(Real FrameMetrics::*field) const {
        if (frames.empty()) return 0;
        Real s = 0;
        for (const auto& f : frames) s += f.*field;
        return s / Real(frames.size());
    }
};

}  // namespace endopbr
