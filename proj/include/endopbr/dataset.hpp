// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "endopbr/frame.hpp"
#include "endopbr/png_io.hpp"
#include "endopbr/serialize.hpp"

namespace endopbr {

namespace fs = std::filesystem;

struct FrameEntry {
    int id = 0;
    std::string image;  // paths relative to the manifest directory
    std::string depth;
    std::string pose;
};

/// manifest.json: intrinsics, depth_scale (meters per raw 16-bit unit),
/// forward_axis, frames[], optional scene_bounds and free-form extras.
struct DatasetManifest {
    Intrinsics intrinsics;
    Real depth_scale = 1e-4;
    ForwardAxis forward_axis = ForwardAxis::PlusZ;
    std::vector<FrameEntry> frames;
    std::optional<SceneBounds> scene_bounds;
    json extra = json::object();

    json to_json() const {
        json j = extra;
        j["intrinsics"] = intrinsics;
        j["depth_scale"] = depth_scale;
        j["forward_axis"] = to_string(forward_axis);
        json fr = json::array();
        for (const auto& f : frames) fr.push_back({{"id", f.id}, {"image", f.image}, {"depth", f.depth}, {"pose", f.pose}});
        j["frames"] = fr;
        if (scene_bounds) j["scene_bounds"] = *scene_bounds;
        return j;
    }

    static DatasetManifest from_json(const json& j) {
        DatasetManifest m;
        m.intrinsics = j.at("intrinsics").get<Intrinsics>();
        m.depth_scale = j.at("depth_scale").get<Real>();
        m.forward_axis = forward_axis_from_string(j.value("forward_axis", std::string("+z")));
        for (const auto& f : j.at("frames"))
            m.frames.push_back({f.at("id").get<int>(), f.at("image").get<std::string>(),
                                f.at("depth").get<std::string>(), f.at("pose").get<std::string>()});
        if (j.contains("scene_bounds")) m.scene_bounds = j.at("scene_bounds").get<SceneBounds>();
        m.extra = j;
        for (const char* key : {"intrinsics", "depth_scale", "forward_axis", "frames", "scene_bounds"}) m.extra.erase(key);
        return m;
    }
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<FrameRecord> frames;

    const Intrinsics& intrinsics() const { return manifest.intrinsics; }
};

inline Pose read_pose_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Load, "cannot open pose file " + path.string());
    std::array<Real, 16> m{};
    for (auto& v : m)
        if (!(is >> v)) throw Error(ErrorKind::Load, "pose file " + path.string() + " needs 16 numbers");
    Pose p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.R(r, c) = m[r * 4 + c];
        p.t[r] = m[r * 4 + 3];
    }
    return p;
}

inline void write_pose_file(const fs::path& path, const Pose& p) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Load, "cannot write pose file " + path.string());
    os << std::setprecision(17);
    for (int r = 0; r < 3; ++r) os << p.R(r, 0) << ' ' << p.R(r, 1) << ' ' << p.R(r, 2) << ' ' << p.t[r] << '\n';
    os << "0 0 0 1\n";
}

inline Gray16Image quantize_depth(const DepthMap& depth, Real depth_scale) {
    Gray16Image raw(depth.width(), depth.height(), 1);
    for (int j = 0; j < depth.height(); ++j)
        for (int i = 0; i < depth.width(); ++i) {
            const Real z = depth.at(i, j);
            if (!depth_valid(z)) continue;
            raw.at(i, j) = static_cast<std::uint16_t>(std::clamp<Real>(std::round(z / depth_scale), 0, 65535));
        }
    return raw;
}

inline DepthMap dequantize_depth(const Gray16Image& raw, Real depth_scale) {
    DepthMap depth(raw.width(), raw.height(), 1);
    for (int j = 0; j < raw.height(); ++j)
        for (int i = 0; i < raw.width(); ++i) depth.at(i, j) = Real(raw.at(i, j)) * depth_scale;
    return depth;
}

inline constexpr Real kPoseLoadTolerance = 1e-4;

struct SplitSummary {
    std::size_t train = 0;
    std::size_t test = 0;
    std::string warning;
};

inline constexpr int kSplitPeriod = 9;

/// 8:1 interleaved split on frames sorted by id: index % 9 == 8 is test.
/// Fewer than 9 frames puts everything in train and sets a warning.
inline SplitSummary split_frames(std::vector<FrameRecord>& frames) {
    std::sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) { return a.frame_id < b.frame_id; });
    SplitSummary s;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const bool test = frames.size() >= kSplitPeriod && k % kSplitPeriod == kSplitPeriod - 1;
        frames[k].split = test ? Split::Test : Split::Train;
        (test ? s.test : s.train) += 1;
    }
    if (frames.size() < kSplitPeriod)
        s.warning = "only " + std::to_string(frames.size()) + " frames; test split is empty";
    return s;
}

inline fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.json" : p; }

/// Reads a manifest and all frames it lists, sorted by id and split 8:1.
inline Dataset load_dataset(const fs::path& path, SplitSummary* split = nullptr) {
    const fs::path mpath = manifest_path(path);
    std::ifstream is(mpath);
    if (!is) throw Error(ErrorKind::Load, "cannot open manifest " + mpath.string());
    Dataset ds;
    try {
        ds.manifest = DatasetManifest::from_json(json::parse(is));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "malformed manifest " + mpath.string() + ": " + e.what());
    }
    const auto& K = ds.manifest.intrinsics;
    K.validate();
    if (!(ds.manifest.depth_scale > 0)) throw Error(ErrorKind::Config, "depth_scale must be positive");
    if (ds.manifest.frames.empty()) throw Error(ErrorKind::EmptyScene, "manifest lists no frames");

    const fs::path root = mpath.parent_path();
    for (const auto& e : ds.manifest.frames) {
        const std::string tag = "frame " + std::to_string(e.id) + ": ";
        for (const auto& rel : {e.image, e.depth, e.pose})
            if (!fs::exists(root / rel)) throw Error(ErrorKind::Load, tag + "missing file " + (root / rel).string());
        FrameRecord f;
        f.frame_id = e.id;
        try {
            f.image = read_png_rgb8(root / e.image);
            f.depth = dequantize_depth(read_png_gray16(root / e.depth), ds.manifest.depth_scale);
            f.pose = read_pose_file(root / e.pose);
        } catch (const Error& err) {
            throw Error(ErrorKind::Load, tag + err.what());
        }
        if (f.image.width() != K.width || f.image.height() != K.height || f.depth.width() != K.width ||
            f.depth.height() != K.height)
            throw Error(ErrorKind::Load, tag + "image or depth size does not match intrinsics");
        if (!f.pose.is_rotation(kPoseLoadTolerance))
            throw Error(ErrorKind::Load, tag + "pose rotation is not orthonormal");
        ds.frames.push_back(std::move(f));
    }
    const SplitSummary s = split_frames(ds.frames);
    if (split) *split = s;
    return ds;
}

inline std::string frame_stem(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d", id);
    return buf;
}

/// Writes one frame's image, depth and pose files under `dir` and returns its
/// manifest entry.
inline FrameEntry write_frame_files(const fs::path& dir, const FrameRecord& f, Real depth_scale) {
    for (const char* sub : {"images", "depth", "poses"}) fs::create_directories(dir / sub);
    const std::string stem = frame_stem(f.frame_id);
    FrameEntry e{f.frame_id, "images/" + stem + ".png", "depth/" + stem + ".png", "poses/" + stem + ".txt"};
    write_png_rgb8(dir / e.image, f.image);
    write_png_gray16(dir / e.depth, quantize_depth(f.depth, depth_scale));
    write_pose_file(dir / e.pose, f.pose);
    return e;
}

inline void write_manifest(const fs::path& dir, const DatasetManifest& manifest) {
    fs::create_directories(dir);
    std::ofstream os(dir / "manifest.json");
    os << manifest.to_json().dump(2) << '\n';
    if (!os) throw Error(ErrorKind::Load, "cannot write " + (dir / "manifest.json").string());
}

/// Writes frames in the on-disk layout (images/, depth/, poses/, manifest.json).
/// The manifest's frame list is rebuilt from `frames`.
inline void write_dataset(const fs::path& dir, DatasetManifest manifest, const std::vector<FrameRecord>& frames) {
    manifest.frames.clear();
    for (const auto& f : frames) manifest.frames.push_back(write_frame_files(dir, f, manifest.depth_scale));
    write_manifest(dir, manifest);
}

}  // namespace endopbr
