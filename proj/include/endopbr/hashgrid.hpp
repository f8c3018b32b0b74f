// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "endopbr/common.hpp"

namespace endopbr {

/// Multiresolution hash grid layout. Level resolutions grow geometrically from
/// `base_resolution` to `finest_resolution`.
struct HashGridConfig {
    int levels = 16;
    int features = 2;
    std::uint32_t table_size = 1u << 19;
    int base_resolution = 16;
    int finest_resolution = 2048;

    void validate() const {
        if (levels < 1) throw Error(ErrorKind::Config, "hash grid needs at least one level");
        if (features < 1) throw Error(ErrorKind::Config, "hash grid needs at least one feature per level");
        if (table_size == 0 || (table_size & (table_size - 1)) != 0)
            throw Error(ErrorKind::Config, "hash table size must be a power of two");
        if (base_resolution < 1 || finest_resolution < base_resolution)
            throw Error(ErrorKind::Config, "hash grid resolutions must satisfy 1 <= base <= finest");
    }

    Real growth() const {
        if (levels == 1) return 1;
        return std::exp((std::log(Real(finest_resolution)) - std::log(Real(base_resolution))) / (levels - 1));
    }

    int resolution(int level) const {
        return static_cast<int>(std::floor(base_resolution * std::pow(growth(), level)));
    }

    int output_dim() const { return levels * features; }
    std::size_t parameter_count() const { return std::size_t(levels) * table_size * features; }

    friend bool operator==(const HashGridConfig&, const HashGridConfig&) = default;
};

inline constexpr std::uint32_t kHashPrime1 = 1u;
inline constexpr std::uint32_t kHashPrime2 = 2654435761u;
inline constexpr std::uint32_t kHashPrime3 = 805459861u;

inline std::uint32_t spatial_hash(std::uint32_t x, std::uint32_t y, std::uint32_t z, std::uint32_t table_size) {
    return ((x * kHashPrime1) ^ (y * kHashPrime2) ^ (z * kHashPrime3)) & (table_size - 1);
}

/// The 8 voxel corners touched at one level: table entry (within the level)
/// and trilinear weight.
struct CornerSet {
    std::array<std::uint32_t, 8> entry;
    std::array<Real, 8> weight;
};

/// Corner lookups for one encoded point, one CornerSet per level.
using HashContext = std::vector<CornerSet>;

inline CornerSet locate_corners(const Vec3& x, int resolution, std::uint32_t table_size) {
    CornerSet cs;
    std::array<std::uint32_t, 3> base;
    std::array<Real, 3> frac;
    for (int a = 0; a < 3; ++a) {
        const Real p = clamp01(x[a]) * resolution;
        Real b = std::floor(p);
        if (b > resolution - 1) b = resolution - 1;
        base[a] = static_cast<std::uint32_t>(b);
        frac[a] = p - b;
    }
    for (int c = 0; c < 8; ++c) {
        const std::uint32_t ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
        cs.entry[c] = spatial_hash(base[0] + ox, base[1] + oy, base[2] + oz, table_size);
        cs.weight[c] = (ox ? frac[0] : 1 - frac[0]) * (oy ? frac[1] : 1 - frac[1]) * (oz ? frac[2] : 1 - frac[2]);
    }
    return cs;
}

/// Encodes a point of [0,1]^3 into `levels * features` values. `tables` is the
/// level-major table array of size levels * table_size * features. When `ctx`
/// is given it receives the corner lookups needed by encode_backward.
inline void encode(const Vec3& x, std::span<const Real> tables, const HashGridConfig& cfg, std::span<Real> out,
                   CornerSet* ctx = nullptr) {
    const int F = cfg.features;
    for (int l = 0; l < cfg.levels; ++l) {
        const CornerSet cs = locate_corners(x, cfg.resolution(l), cfg.table_size);
        const std::size_t level_offset = std::size_t(l) * cfg.table_size;
        for (int f = 0; f < F; ++f) {
            Real acc = 0;
            for (int c = 0; c < 8; ++c) acc += cs.weight[c] * tables[(level_offset + cs.entry[c]) * F + f];
            out[l * F + f] = acc;
        }
        if (ctx) ctx[l] = cs;
    }
}

inline std::vector<Real> encode(const Vec3& x, std::span<const Real> tables, const HashGridConfig& cfg,
                                HashContext* ctx = nullptr) {
    std::vector<Real> out(cfg.output_dim());
    if (ctx) ctx->resize(cfg.levels);
    encode(x, tables, cfg, out, ctx ? ctx->data() : nullptr);
    return out;
}

/// Accumulates upstream * weight into the gradient slot of every touched
/// corner entry. `ctx` holds one CornerSet per level from the forward pass.
inline void encode_backward(const CornerSet* ctx, std::span<const Real> upstream, const HashGridConfig& cfg,
                            std::span<Real> grad) {
    const int F = cfg.features;
    for (int l = 0; l < cfg.levels; ++l) {
        const CornerSet& cs = ctx[l];
        const std::size_t level_offset = std::size_t(l) * cfg.table_size;
        for (int f = 0; f < F; ++f) {
            const Real up = upstream[l * F + f];
            if (up == 0) continue;
            for (int c = 0; c < 8; ++c) grad[(level_offset + cs.entry[c]) * F + f] += cs.weight[c] * up;
        }
    }
}

inline void encode_backward(const HashContext& ctx, std::span<const Real> upstream, const HashGridConfig& cfg,
                            std::span<Real> grad) {
    if (ctx.size() != std::size_t(cfg.levels))
        throw Error(ErrorKind::MissingContext, "hash context does not match the grid configuration");
    encode_backward(ctx.data(), upstream, cfg, grad);
}

}  // namespace endopbr
