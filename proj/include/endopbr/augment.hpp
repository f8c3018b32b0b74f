// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "endopbr/dataset.hpp"
#include "endopbr/renderer.hpp"
#include "endopbr/rng.hpp"

namespace endopbr {

/// Perturbations for synthetic-dataset export. Ranges are sampled uniformly
/// once per exported sample.
struct AugmentationSpec {
    Real rotation_deg_std = 5.0;
    Real translation_std = 0.002;  // meters
    int samples_per_frame = 24;
    Real albedo_scale_min = 0.8, albedo_scale_max = 1.2;
    Real roughness_offset_min = 0.0, roughness_offset_max = 0.0;
    Real L0_scale_min = 0.7, L0_scale_max = 1.3;
    std::optional<Real> n_exp, q_exp, gamma;
    bool exclude_training_poses = true;
    int splat_window = 2;  // neighbors on each side used as splat sources
    Real min_valid_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        auto ordered = [](Real lo, Real hi, const char* what) {
            if (!(lo <= hi)) throw Error(ErrorKind::Config, std::string(what) + " range is not ordered");
        };
        ordered(albedo_scale_min, albedo_scale_max, "albedo scale");
        ordered(roughness_offset_min, roughness_offset_max, "roughness offset");
        ordered(L0_scale_min, L0_scale_max, "L0 scale");
        if (samples_per_frame < 0) throw Error(ErrorKind::Config, "samples_per_frame must be >= 0");
        if (rotation_deg_std < 0 || translation_std < 0) throw Error(ErrorKind::Config, "jitter must be >= 0");
        if (splat_window < 0) throw Error(ErrorKind::Config, "splat_window must be >= 0");
        for (auto v : {n_exp, q_exp, gamma})
            if (v && !(*v > 0)) throw Error(ErrorKind::Config, "light overrides must be positive");
        if (L0_scale_min < 0 || albedo_scale_min < 0) throw Error(ErrorKind::Config, "scales must be >= 0");
    }

    bool moves_camera() const { return rotation_deg_std > 0 || translation_std > 0; }

    static AugmentationSpec from_json(const json& j) {
        AugmentationSpec s;
        s.rotation_deg_std = j.value("rotation_deg_std", s.rotation_deg_std);
        s.translation_std = j.value("translation_std", s.translation_std);
        s.samples_per_frame = j.value("samples_per_frame", s.samples_per_frame);
        auto range = [&](const char* key, Real& lo, Real& hi) {
            if (j.contains(key)) {
                lo = j.at(key).at(0).get<Real>();
                hi = j.at(key).at(1).get<Real>();
            }
        };
        range("albedo_scale", s.albedo_scale_min, s.albedo_scale_max);
        range("roughness_offset", s.roughness_offset_min, s.roughness_offset_max);
        range("L0_scale", s.L0_scale_min, s.L0_scale_max);
        auto opt = [&](const char* key, std::optional<Real>& v) {
            if (j.contains(key) && !j.at(key).is_null()) v = j.at(key).get<Real>();
        };
        opt("n_exp", s.n_exp);
        opt("q_exp", s.q_exp);
        opt("gamma", s.gamma);
        s.exclude_training_poses = j.value("exclude_training_poses", s.exclude_training_poses);
        s.splat_window = j.value("splat_window", s.splat_window);
        s.min_valid_fraction = j.value("min_valid_fraction", s.min_valid_fraction);
        s.seed = j.value("seed", s.seed);
        return s;
    }

    json to_json() const {
        json j = {{"rotation_deg_std", rotation_deg_std},
                  {"translation_std", translation_std},
                  {"samples_per_frame", samples_per_frame},
                  {"albedo_scale", {albedo_scale_min, albedo_scale_max}},
                  {"roughness_offset", {roughness_offset_min, roughness_offset_max}},
                  {"L0_scale", {L0_scale_min, L0_scale_max}},
                  {"exclude_training_poses", exclude_training_poses},
                  {"splat_window", splat_window},
                  {"min_valid_fraction", min_valid_fraction},
                  {"seed", seed}};
        j["n_exp"] = n_exp ? json(*n_exp) : json(nullptr);
        j["q_exp"] = q_exp ? json(*q_exp) : json(nullptr);
        j["gamma"] = gamma ? json(*gamma) : json(nullptr);
        return j;
    }
};

inline std::size_t planned_sample_count(std::size_t base_frames, const AugmentationSpec& spec) {
    return base_frames * std::size_t(spec.samples_per_frame);
}

/// One exported sample, as handed to an export observer before quantization.
struct AugmentedSample {
    int index = 0;
    int base_frame_id = 0;
    Pose pose;
    DepthMap depth;
    RenderedImage render;
    Real albedo_scale = 1, roughness_offset = 0;
    SpotlightParams light;
};

struct ExportReport {
    std::size_t requested = 0;
    std::size_t written = 0;
    std::size_t skipped_coverage = 0;
    std::size_t skipped_excluded = 0;

    json to_json() const {
        return {{"requested", requested},
                {"written", written},
                {"skipped_low_coverage", skipped_coverage},
                {"skipped_excluded_pose", skipped_excluded}};
    }
};

inline bool poses_equal(const Pose& a, const Pose& b, Real tol = 1e-9) {
    return (a.R - b.R).cwiseAbs().maxCoeff() <= tol && (a.t - b.t).cwiseAbs().maxCoeff() <= tol;
}

/// Camera-frame perturbation: rotation vector and translation drawn per axis
/// from zero-mean normals.
inline Pose perturb_pose(const Pose& base, const AugmentationSpec& spec, CounterRng& rng) {
    if (!spec.moves_camera()) return base;
    const Real rot_std = spec.rotation_deg_std * kPi / 180;
    const Vec3 rv(rng.normal() * rot_std, rng.normal() * rot_std, rng.normal() * rot_std);
    const Vec3 dt(rng.normal() * spec.translation_std, rng.normal() * spec.translation_std,
                  rng.normal() * spec.translation_std);
    Pose p;
    p.R = base.R * rotation_from_vector(rv);
    p.t = base.t + base.R * dt;
    return p;
}

/// Renders perturbed views of `base` with `model` and writes them as a new
/// dataset under `out_dir`. Depth for moved cameras is splatted from the base
/// frame and its neighbors; samples whose splat covers less than
/// `min_valid_fraction` of the base frame's valid pixels are skipped.
inline ExportReport export_augmented(const Model& model, const Dataset& base, const AugmentationSpec& spec,
                                     const fs::path& out_dir,
                                     const std::function<void(const AugmentedSample&)>& observer = {}) {
    spec.validate();
    const Intrinsics& K = base.intrinsics();
    const auto train_frames = frames_in_split(base.frames, Split::Train);
    CounterRng rng(spec.seed, "augment");
    const RenderSettings settings{model.config().brdf, model.config().forward_axis};
    const NeuralMaterial neural{model};

    ExportReport report;
    report.requested = planned_sample_count(base.frames.size(), spec);
    DatasetManifest manifest;
    manifest.intrinsics = K;
    manifest.depth_scale = base.manifest.depth_scale;
    manifest.forward_axis = base.manifest.forward_axis;
    json records = json::array();
    for (std::size_t b = 0; b < base.frames.size(); ++b) {
        const FrameRecord& src = base.frames[b];
        std::size_t base_valid = 0;
        for (Real z : src.depth.data()) base_valid += depth_valid(z);
        const std::size_t lo = b >= std::size_t(spec.splat_window) ? b - spec.splat_window : 0;
        const std::size_t hi = std::min(base.frames.size(), b + spec.splat_window + 1);
        const std::span<const FrameRecord> sources(base.frames.data() + lo, hi - lo);

        for (int s = 0; s < spec.samples_per_frame; ++s) {
            AugmentedSample smp;
            smp.base_frame_id = src.frame_id;
            smp.pose = perturb_pose(src.pose, spec, rng);
            smp.albedo_scale = rng.uniform(spec.albedo_scale_min, spec.albedo_scale_max);
            smp.roughness_offset = rng.uniform(spec.roughness_offset_min, spec.roughness_offset_max);
            smp.light = model.light();
            smp.light.L0 *= rng.uniform(spec.L0_scale_min, spec.L0_scale_max);
            if (spec.n_exp) smp.light.n_exp = *spec.n_exp;
            if (spec.q_exp) smp.light.q_exp = *spec.q_exp;
            if (spec.gamma) smp.light.gamma = *spec.gamma;

            if (spec.exclude_training_poses &&
                std::any_of(train_frames.begin(), train_frames.end(),
                            [&](const FrameRecord* f) { return poses_equal(f->pose, smp.pose); })) {
                ++report.skipped_excluded;
                continue;
            }
            smp.depth = poses_equal(smp.pose, src.pose, 0) ? src.depth : splat_depth(smp.pose, sources, K);
            std::size_t valid = 0;
            for (Real z : smp.depth.data()) valid += depth_valid(z);
            if (Real(valid) < spec.min_valid_fraction * Real(base_valid)) {
                ++report.skipped_coverage;
                continue;
            }
            const AdjustedMaterial<NeuralMaterial> material{neural, smp.albedo_scale, smp.roughness_offset};
            smp.render = render_image(smp.pose, smp.depth, K, material, smp.light, settings);
            smp.index = int(report.written);
            if (observer) observer(smp);

            FrameRecord rec;
            rec.frame_id = smp.index;
            rec.image = smp.render.to_8bit();
            rec.depth = std::move(smp.depth);
            rec.pose = smp.pose;
            manifest.frames.push_back(write_frame_files(out_dir, rec, manifest.depth_scale));
            ++report.written;
            records.push_back({{"id", smp.index},
                               {"base_frame_id", smp.base_frame_id},
                               {"albedo_scale", smp.albedo_scale},
                               {"roughness_offset", smp.roughness_offset},
                               {"light", smp.light}});
        }
    }
    manifest.extra["augmentation"] = {{"spec", spec.to_json()}, {"samples", records}, {"report", report.to_json()}};
    write_manifest(out_dir, manifest);
    return report;
}

}  // namespace endopbr
