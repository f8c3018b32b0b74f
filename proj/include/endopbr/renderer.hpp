// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "endopbr/brdf.hpp"
#include "endopbr/geometry.hpp"
#include "endopbr/image.hpp"
#include "endopbr/lighting.hpp"
#include "endopbr/model.hpp"

namespace endopbr {

struct PixelShadingInput {
    Vec3 x;            // world point
    Vec3 normal;       // unit, world frame
    Vec3 omega_o;      // unit, surface toward camera
    Vec3 cam_center;   // also the light position
    Vec3 light_axis;   // unit spotlight direction
};

struct ShadeResult {
    Vec3 hdr = Vec3::Zero();
    Vec3 ldr = Vec3::Zero();  // hdr^gamma, unclamped

    Vec3 display() const { return ldr.unaryExpr([](Real v) { return clamp01(v); }); }
};

/// Single-bounce radiance with co-located light and camera:
///   hdr = 2 pi f(w_o) L_i max(w_o.n, 0),  ldr = hdr^gamma.
inline ShadeResult shade_pixel(const PixelShadingInput& in, const BrdfSample& s, const SpotlightParams& light,
                               const BrdfOptions& opt = {}) {
    ShadeResult r;
    const Real c = in.omega_o.dot(in.normal);
    if (!(c > 0)) return r;
    const Real Li = incident_light(in.x, in.cam_center, in.light_axis, light);
    if (Li == 0) return r;
    r.hdr = 2 * kPi * Li * c * brdf_total(in.omega_o, in.normal, s, opt);
    r.ldr = gamma_map_unclamped(r.hdr, light.gamma);
    return r;
}

inline void shade_pixels(std::span<const PixelShadingInput> in, std::span<const BrdfSample> samples,
                         const SpotlightParams& light, const BrdfOptions& opt, std::span<ShadeResult> out) {
    if (in.size() != samples.size() || in.size() != out.size())
        throw Error(ErrorKind::Config, "shade_pixels: mismatched batch sizes");
    for (std::size_t k = 0; k < in.size(); ++k) out[k] = shade_pixel(in[k], samples[k], light, opt);
}

inline PixelShadingInput make_shading_input(const Vec3& x, const Vec3& normal, const Pose& pose, ForwardAxis axis) {
    return {x, normal, view_direction(x, pose.center()), pose.center(), pose.forward(axis)};
}

/// Something that can produce materials for a batch of world points.
template <typename T>
concept MaterialSource = requires(const T& src, std::span<const Vec3> xs) {
    { src.materials(xs) } -> std::convertible_to<std::vector<BrdfSample>>;
};

struct NeuralMaterial {
    const Model& model;
    std::vector<BrdfSample> materials(std::span<const Vec3> xs) const { return predict_materials(model, xs); }
};

struct ConstantMaterial {
    BrdfSample sample;
    std::vector<BrdfSample> materials(std::span<const Vec3> xs) const {
        return std::vector<BrdfSample>(xs.size(), sample);
    }
};

/// Global albedo multiplier and roughness offset applied on top of another
/// source; results are re-clamped to [0,1].
template <MaterialSource Inner>
struct AdjustedMaterial {
    const Inner& inner;
    Real albedo_scale = 1;
    Real roughness_offset = 0;

    std::vector<BrdfSample> materials(std::span<const Vec3> xs) const {
        auto out = inner.materials(xs);
        if (albedo_scale == 1 && roughness_offset == 0) return out;
        for (auto& s : out) {
            s.base_color = (albedo_scale * s.base_color).unaryExpr([](Real v) { return clamp01(v); });
            s.roughness = clamp01(s.roughness + roughness_offset);
        }
        return out;
    }
};

struct RenderSettings {
    BrdfOptions brdf;
    ForwardAxis forward_axis = ForwardAxis::PlusZ;
    std::size_t chunk = 65536;
};

struct RenderedImage {
    RgbImageF hdr;
    RgbImageF ldr;  // clamped to [0,1]
    Mask valid;

    RgbImage8 to_8bit() const { return endopbr::to_8bit(ldr); }
};

/// Shades every pixel with a usable depth and normal; the rest stay black.
template <MaterialSource Source>
RenderedImage render_image(const Pose& pose, const DepthMap& depth, const Intrinsics& K, const Source& source,
                           const SpotlightParams& light, const RenderSettings& settings = {}) {
    if (depth.width() != K.width || depth.height() != K.height)
        throw Error(ErrorKind::Config, "depth map shape does not match intrinsics");
    const NormalMap nm = normals_from_depth(depth, K, pose);
    RenderedImage img{RgbImageF(K.width, K.height, 3), RgbImageF(K.width, K.height, 3), nm.valid};

    std::vector<std::pair<int, int>> pixels;
    for (int j = 0; j < K.height; ++j)
        for (int i = 0; i < K.width; ++i)
            if (nm.valid.at(i, j)) pixels.emplace_back(i, j);

    const std::size_t chunk = std::max<std::size_t>(settings.chunk, 1);
    std::vector<Vec3> xs;
    std::vector<PixelShadingInput> inputs;
    std::vector<ShadeResult> results;
    for (std::size_t begin = 0; begin < pixels.size(); begin += chunk) {
        const std::size_t end = std::min(pixels.size(), begin + chunk);
        xs.clear();
        inputs.clear();
        for (std::size_t k = begin; k < end; ++k) {
            auto [i, j] = pixels[k];
            const Vec3 x = pose.to_world(camera_point(i, j, depth.at(i, j), K));
            xs.push_back(x);
            inputs.push_back(make_shading_input(x, nm.at(i, j), pose, settings.forward_axis));
        }
        const std::vector<BrdfSample> mats = source.materials(xs);
        results.resize(inputs.size());
        shade_pixels(inputs, mats, light, settings.brdf, results);
        for (std::size_t k = begin; k < end; ++k) {
            auto [i, j] = pixels[k];
            const ShadeResult& r = results[k - begin];
            const Vec3 disp = r.display();
            for (int c = 0; c < 3; ++c) {
                img.hdr.at(i, j, c) = r.hdr[c];
                img.ldr.at(i, j, c) = disp[c];
            }
        }
    }
    return img;
}

inline RenderedImage render_image(const Pose& pose, const DepthMap& depth, const Intrinsics& K, const Model& model,
                                  std::size_t chunk = 65536) {
    RenderSettings rs{model.config().brdf, model.config().forward_axis, chunk};
    return render_image(pose, depth, K, NeuralMaterial{model}, model.light(), rs);
}

/// Depth for a pose without measurements: forward-project the valid pixels of
/// the source frames into a soft z-buffer, then fill empty pixels once with the
/// median of their valid 3x3 neighbors. Hits within a relative depth band of
/// the nearest one are taken as the same surface; among those the hit landing
/// closest to the pixel center wins, which keeps steep silhouettes stable.
template <typename FrameRange>
DepthMap splat_depth(const Pose& target, const FrameRange& sources, const Intrinsics& K) {
    constexpr Real kSurfaceBand = 0.05;
    struct Hit {
        int pixel;
        Real z, d2;
    };
    std::vector<Hit> hits;
    DepthMap nearest(K.width, K.height, 1, 0.0);
    std::size_t points = 0;
    for (const auto& f : sources) {
        for (int j = 0; j < f.depth.height(); ++j)
            for (int i = 0; i < f.depth.width(); ++i) {
                const Real z = f.depth.at(i, j);
                if (!depth_valid(z)) continue;
                ++points;
                const Vec3 uvz = project_point(f.pose.to_world(camera_point(i, j, z, K)), K, target);
                if (!(uvz.z() > 0)) continue;
                const Real u = std::round(uvz.x()), v = std::round(uvz.y());
                if (u < 0 || v < 0 || u > K.width - 1 || v > K.height - 1) continue;
                const Real d2 = (uvz.x() - u) * (uvz.x() - u) + (uvz.y() - v) * (uvz.y() - v);
                hits.push_back({int(v) * K.width + int(u), uvz.z(), d2});
                Real& slot = nearest.data()[hits.back().pixel];
                if (slot == 0 || uvz.z() < slot) slot = uvz.z();
            }
    }
    if (points == 0) throw Error(ErrorKind::EmptyScene, "no valid source points to splat");

    DepthMap zbuf(K.width, K.height, 1, 0.0);
    Image<Real> best_d2(K.width, K.height, 1, std::numeric_limits<Real>::infinity());
    for (const Hit& h : hits) {
        if (h.z > nearest.data()[h.pixel] * (1 + kSurfaceBand) || h.d2 >= best_d2.data()[h.pixel]) continue;
        best_d2.data()[h.pixel] = h.d2;
        zbuf.data()[h.pixel] = h.z;
    }

    DepthMap filled = zbuf;
    std::vector<Real> nb;
    for (int j = 0; j < K.height; ++j)
        for (int i = 0; i < K.width; ++i) {
            if (zbuf.at(i, j) > 0) continue;
            nb.clear();
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int x = i + di, y = j + dj;
                    if ((di || dj) && x >= 0 && y >= 0 && x < K.width && y < K.height && zbuf.at(x, y) > 0)
                        nb.push_back(zbuf.at(x, y));
                }
            if (nb.empty()) continue;
            std::sort(nb.begin(), nb.end());
            const std::size_t m = nb.size() / 2;
            filled.at(i, j) = nb.size() % 2 ? nb[m] : Real(0.5) * (nb[m - 1] + nb[m]);
        }
    return filled;
}

}  // namespace endopbr
