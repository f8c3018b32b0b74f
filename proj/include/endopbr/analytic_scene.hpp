// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>

#include "endopbr/dataset.hpp"
#include "endopbr/renderer.hpp"

namespace endopbr {

enum class AnalyticKind { Sphere, Plane };

inline AnalyticKind analytic_kind_from_string(const std::string& s) {
    if (s == "sphere") return AnalyticKind::Sphere;
    if (s == "plane") return AnalyticKind::Plane;
    throw Error(ErrorKind::Config, "scene kind must be 'sphere' or 'plane', got '" + s + "'");
}

/// Ground-truth fixture: a sphere or plane of constant material lit by the
/// camera spotlight.
struct AnalyticSceneSpec {
    AnalyticKind kind = AnalyticKind::Sphere;
    int n_views = 20;
    BrdfSample material{Vec3(0.7, 0.3, 0.2), 0.5, 0.0};
    SpotlightParams light{5.0, 2.0, 2.0, 2.2};
    Intrinsics K{160, 160, 40, 40, 80, 80};
    Real depth_scale = 1e-4;
    BrdfOptions brdf;
    // sphere: centered at the origin, cameras orbit at `orbit_distance`
    Real sphere_radius = 1.0;
    Real orbit_distance = 5.0;
    // plane: world z = plane_distance, cameras dolly along -z from the origin
    Real plane_distance = 0.1;

    json to_json() const {
        return {{"kind", kind == AnalyticKind::Sphere ? "sphere" : "plane"},
                {"n_views", n_views},
                {"sphere_radius", sphere_radius},
                {"orbit_distance", orbit_distance},
                {"plane_distance", plane_distance},
                {"brdf_factor4", brdf.factor4}};
    }
};

inline Pose analytic_view_pose(const AnalyticSceneSpec& spec, int k) {
    if (spec.kind == AnalyticKind::Plane) {
        Pose p;
        p.t = Vec3(0.003 * std::sin(Real(k)), 0.003 * (std::cos(Real(k)) - 1), -0.002 * k);
        return p;
    }
    const Real phi = 2 * kPi * k / spec.n_views;
    const Real elev = 0.35 * std::sin(3 * phi);
    const Vec3 eye = spec.orbit_distance * Vec3(std::cos(elev) * std::cos(phi), std::sin(elev),
                                                std::cos(elev) * std::sin(phi));
    const Vec3 target(0.15 * std::sin(2 * phi + 1), 0.15 * std::cos(3 * phi), 0.1 * std::sin(phi));
    return look_at(eye, target, Vec3(0, -1, 0));
}

/// Camera-space depth of the analytic surface along each pixel ray; 0 where
/// the ray misses.
inline DepthMap analytic_depth(const AnalyticSceneSpec& spec, const Pose& pose) {
    const Intrinsics& K = spec.K;
    DepthMap depth(K.width, K.height, 1);
    for (int j = 0; j < K.height; ++j)
        for (int i = 0; i < K.width; ++i) {
            const Vec3 d = pose.R * Vec3((i - K.cx) / K.fx, (j - K.cy) / K.fy, 1);  // camera z component is 1
            const Vec3 o = pose.t;
            Real t = -1;
            if (spec.kind == AnalyticKind::Sphere) {
                const Real a = d.squaredNorm(), b = 2 * o.dot(d),
                           c = o.squaredNorm() - spec.sphere_radius * spec.sphere_radius;
                const Real disc = b * b - 4 * a * c;
                if (disc >= 0) t = (-b - std::sqrt(disc)) / (2 * a);
            } else if (d.z() != 0) {
                t = (spec.plane_distance - o.z()) / d.z();
            }
            if (t > 0) depth.at(i, j) = t;
        }
    return depth;
}

/// Renders every view of the fixture with the constant ground-truth material,
/// writes it as a dataset to `out_dir` and returns the dataset as reloaded.
inline Dataset generate_analytic_scene(const AnalyticSceneSpec& spec, const fs::path& out_dir) {
    if (spec.n_views < 1) throw Error(ErrorKind::Config, "analytic scene needs at least one view");
    spec.K.validate();
    DatasetManifest manifest;
    manifest.intrinsics = spec.K;
    manifest.depth_scale = spec.depth_scale;
    manifest.extra["truth"] = {{"material", spec.material}, {"light", spec.light}};
    manifest.extra["scene"] = spec.to_json();

    std::vector<FrameRecord> frames;
    const RenderSettings settings{spec.brdf, ForwardAxis::PlusZ};
    for (int k = 0; k < spec.n_views; ++k) {
        FrameRecord f;
        f.frame_id = k;
        f.pose = analytic_view_pose(spec, k);
        // shade from the quantized depth so the stored image matches what a loader sees
        f.depth = dequantize_depth(quantize_depth(analytic_depth(spec, f.pose), spec.depth_scale), spec.depth_scale);
        f.image = render_image(f.pose, f.depth, spec.K, ConstantMaterial{spec.material}, spec.light, settings).to_8bit();
        frames.push_back(std::move(f));
    }
    write_dataset(out_dir, manifest, frames);
    return load_dataset(out_dir);
}

}  // namespace endopbr
