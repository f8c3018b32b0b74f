// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "endopbr/common.hpp"
#include "endopbr/image.hpp"

namespace endopbr {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct Intrinsics {
    Real fx = 1, fy = 1;
    Real cx = 0, cy = 0;
    int width = 1, height = 1;

    void validate() const {
        if (!(fx > 0) || !(fy > 0)) throw Error(ErrorKind::Config, "focal lengths must be positive");
        if (width <= 0 || height <= 0) throw Error(ErrorKind::Config, "image size must be positive");
        if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
            throw Error(ErrorKind::Config, "principal point outside the image");
    }

    bool contains(Real i, Real j) const {
        return i >= 0 && j >= 0 && i <= Real(width - 1) && j <= Real(height - 1);
    }

    friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

enum class ForwardAxis { PlusZ, MinusZ };

/// Camera-to-world rigid transform.
struct Pose {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 center() const { return t; }

    Vec3 forward(ForwardAxis axis = ForwardAxis::PlusZ) const {
        return axis == ForwardAxis::PlusZ ? Vec3(R.col(2)) : Vec3(-R.col(2));
    }

    Vec3 to_world(const Vec3& p_cam) const { return R * p_cam + t; }
    Vec3 to_camera(const Vec3& p_world) const { return R.transpose() * (p_world - t); }

    /// Largest deviation of R from a proper rotation (orthonormality or det).
    Real rotation_error() const {
        Real err = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
        return std::max(err, std::abs(R.determinant() - 1));
    }

    bool is_rotation(Real tol = 1e-6) const { return rotation_error() <= tol; }
};

inline Vec3 camera_point(Real i, Real j, Real z, const Intrinsics& K) {
    return {(i - K.cx) / K.fx * z, (j - K.cy) / K.fy * z, z};
}

inline Vec3 unproject_pixel(Real i, Real j, Real z, const Intrinsics& K, const Pose& P) {
    if (!(z > 0) || !std::isfinite(z)) throw Error(ErrorKind::InvalidDepth, "depth must be positive");
    if (!K.contains(i, j)) throw Error(ErrorKind::Config, "pixel outside the image");
    return P.to_world(camera_point(i, j, z, K));
}

/// Inverse of unproject_pixel: returns (column, row, camera depth).
inline Vec3 project_point(const Vec3& x_world, const Intrinsics& K, const Pose& P) {
    Vec3 c = P.to_camera(x_world);
    return {K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy, c.z()};
}

inline bool depth_valid(Real z) { return z > 0 && std::isfinite(z); }

/// Camera-frame normal at pixel (i, j) from the cross product of central
/// differences of unprojected neighbors (one-sided on the image border).
/// Returns nothing if the pixel or one of its 4-neighbors has no depth, or if
/// the cross product degenerates.
inline std::optional<Vec3> normal_at(const DepthMap& depth, const Intrinsics& K, int i, int j) {
    const int w = depth.width(), h = depth.height();
    auto valid = [&](int x, int y) { return depth_valid(depth.at(x, y)); };
    if (!valid(i, j)) return std::nullopt;
    const bool has_l = i > 0, has_r = i + 1 < w, has_u = j > 0, has_d = j + 1 < h;
    if ((has_l && !valid(i - 1, j)) || (has_r && !valid(i + 1, j)) || (has_u && !valid(i, j - 1)) ||
        (has_d && !valid(i, j + 1)))
        return std::nullopt;
    if ((!has_l && !has_r) || (!has_u && !has_d)) return std::nullopt;

    auto point = [&](int x, int y) { return camera_point(x, y, depth.at(x, y), K); };
    const Vec3 center = point(i, j);
    const Vec3 dx = (has_r ? point(i + 1, j) : center) - (has_l ? point(i - 1, j) : center);
    const Vec3 dy = (has_d ? point(i, j + 1) : center) - (has_u ? point(i, j - 1) : center);

    Vec3 n = dx.cross(dy);
    const Real len = n.norm();
    if (!(len > 1e-12 * dx.norm() * dy.norm()) || !(len > 0)) return std::nullopt;
    n /= len;
    const Real facing = -n.dot(center);
    if (facing == 0) return std::nullopt;
    if (facing < 0) n = -n;
    return n;
}

struct NormalMap {
    RgbImageF normals;  // world frame, 3 channels
    Mask valid;

    Vec3 at(int i, int j) const {
        return {normals.at(i, j, 0), normals.at(i, j, 1), normals.at(i, j, 2)};
    }
};

inline NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& K, const Pose& P) {
    if (depth.width() != K.width || depth.height() != K.height)
        throw Error(ErrorKind::Config, "depth map size does not match intrinsics");
    NormalMap out{RgbImageF(K.width, K.height, 3), Mask(K.width, K.height, 1)};
    for (int j = 0; j < K.height; ++j) {
        for (int i = 0; i < K.width; ++i) {
            auto n = normal_at(depth, K, i, j);
            if (!n) continue;
            Vec3 nw = (P.R * *n).normalized();
            for (int c = 0; c < 3; ++c) out.normals.at(i, j, c) = nw[c];
            out.valid.at(i, j) = 1;
        }
    }
    return out;
}

/// Unit vector from the surface point toward the camera.
inline Vec3 view_direction(const Vec3& x, const Vec3& cam_center) {
    Vec3 d = cam_center - x;
    const Real len = d.norm();
    if (!(len > 0)) throw Error(ErrorKind::DegenerateGeometry, "surface point coincides with camera");
    return d / len;
}

struct SceneBounds {
    Vec3 min_corner = Vec3::Zero();
    Vec3 max_corner = Vec3::Ones();

    Vec3 extent() const { return max_corner - min_corner; }
};

inline constexpr Real kBoundsMargin = 0.01;
inline constexpr Real kDegenerateExtent = 1e-6;
inline constexpr Real kExpandedExtent = 1e-3;

/// Bounds of a point set with a 1% margin per side; axes thinner than 1e-6 m
/// are widened to 1e-3 m around their center.
inline SceneBounds fit_scene_bounds(std::span<const Vec3> points) {
    if (points.empty()) throw Error(ErrorKind::EmptyScene, "no valid points to bound");
    Vec3 lo = Vec3::Constant(std::numeric_limits<Real>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 margin = kBoundsMargin * (hi - lo);
    lo -= margin;
    hi += margin;
    for (int a = 0; a < 3; ++a) {
        if (hi[a] - lo[a] < kDegenerateExtent) {
            const Real mid = Real(0.5) * (lo[a] + hi[a]);
            lo[a] = mid - kExpandedExtent / 2;
            hi[a] = mid + kExpandedExtent / 2;
        }
    }
    return {lo, hi};
}

/// Frame-set overload: any range whose elements expose `depth`, `pose` and an
/// `Intrinsics` passed alongside.
template <typename FrameRange>
SceneBounds fit_scene_bounds(const FrameRange& frames, const Intrinsics& K) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<Real>::infinity());
    Vec3 hi = -lo;
    bool any = false;
    for (const auto& f : frames) {
        for (int j = 0; j < f.depth.height(); ++j)
            for (int i = 0; i < f.depth.width(); ++i) {
                const Real z = f.depth.at(i, j);
                if (!depth_valid(z)) continue;
                Vec3 p = f.pose.to_world(camera_point(i, j, z, K));
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
                any = true;
            }
    }
    if (!any) throw Error(ErrorKind::EmptyScene, "no valid depth pixels in any frame");
    const std::array<Vec3, 2> corners{lo, hi};
    return fit_scene_bounds(std::span<const Vec3>(corners));
}

inline Vec3 normalize_point(const Vec3& x, const SceneBounds& b) {
    Vec3 out;
    for (int a = 0; a < 3; ++a)
        out[a] = clamp01((x[a] - b.min_corner[a]) / (b.max_corner[a] - b.min_corner[a]));
    return out;
}

/// Rotation matrix from an axis-angle vector (radians).
inline Mat3 rotation_from_vector(const Vec3& v) {
    const Real angle = v.norm();
    if (angle == 0) return Mat3::Identity();
    return Eigen::AngleAxisd(angle, v / angle).toRotationMatrix();
}

/// Camera-to-world pose at `eye` looking toward `target`, with image rows
/// pointing roughly along `down`.
inline Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& down = Vec3(0, 1, 0)) {
    Vec3 z = (target - eye).normalized();
    Vec3 x = down.cross(z);
    if (x.norm() < 1e-9) x = Vec3(0, 0, 1).cross(z);
    x.normalize();
    Vec3 y = z.cross(x);
    Pose p;
    p.R.col(0) = x;
    p.R.col(1) = y;
    p.R.col(2) = z;
    p.t = eye;
    return p;
}

}  // namespace endopbr
