// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "endopbr/common.hpp"

namespace endopbr {

/// Per-point material: base color, roughness and metallic, all in [0,1].
struct BrdfSample {
    Vec3 base_color = Vec3::Constant(0.5);
    Real roughness = 0.5;
    Real metallic = 0.5;
};

struct BrdfOptions {
    /// Use the conventional 4(n.wi)(n.wo) Cook-Torrance denominator instead of
    /// (n.wi)(n.wo).
    bool factor4 = false;

    friend bool operator==(const BrdfOptions&, const BrdfOptions&) = default;
};

inline constexpr Real kGrazingCosine = 1e-4;
inline constexpr Real kDielectricF0 = 0.04;

inline Vec3 brdf_diffuse(const BrdfSample& s) { return (1 - s.metallic) / kPi * s.base_color; }

/// Specular lobe value and its partial derivatives.
struct SpecularTerm {
    Real value = 0;
    Real d_roughness = 0;
    Real d_metallic = 0;
};

/// White specular lobe for co-located light and camera: the half vector equals
/// the view direction, so every factor depends on c = n.w only.
///   D = a^2 / (pi (c^2 (a^2 - 1) + 1)^2),  a = r^2
///   F = F0 + (1 - F0)(1 - c)^5,            F0 = 0.04 (1 - m) + m
///   G = G1(c)^2,  G1 = c / (c (1 - k) + k), k = (r + 1)^2 / 8
/// c is floored at 1e-4 in every denominator; c <= 0 contributes nothing.
inline SpecularTerm brdf_specular_term(Real c, Real roughness, Real metallic, const BrdfOptions& opt = {}) {
    SpecularTerm out;
    if (!(c > 0)) return out;
    const Real cs = std::max(c, kGrazingCosine);

    const Real a2 = roughness * roughness * roughness * roughness;
    const Real da2_dr = 4 * roughness * roughness * roughness;
    const Real dden = cs * cs * (a2 - 1) + 1;
    const Real D = a2 / (kPi * dden * dden);
    const Real dD_da2 = (dden - 2 * a2 * cs * cs) / (kPi * dden * dden * dden);
    const Real dD_dr = dD_da2 * da2_dr;

    const Real w = std::pow(1 - std::min(c, Real(1)), 5);
    const Real F0 = kDielectricF0 * (1 - metallic) + metallic;
    const Real F = F0 + (1 - F0) * w;
    const Real dF_dm = (1 - kDielectricF0) * (1 - w);

    const Real k = (roughness + 1) * (roughness + 1) / 8;
    const Real dk_dr = (roughness + 1) / 4;
    const Real gden = cs * (1 - k) + k;
    const Real G1 = c / gden;
    const Real dG1_dk = -c * (1 - cs) / (gden * gden);
    const Real G = G1 * G1;
    const Real dG_dr = 2 * G1 * dG1_dk * dk_dr;

    const Real denom = (opt.factor4 ? 4 : 1) * cs * cs;
    out.value = D * F * G / denom;
    out.d_roughness = (dD_dr * F * G + D * F * dG_dr) / denom;
    out.d_metallic = D * dF_dm * G / denom;
    return out;
}

inline Real brdf_specular(const Vec3& omega, const Vec3& n, const BrdfSample& s, const BrdfOptions& opt = {}) {
    return brdf_specular_term(omega.dot(n), s.roughness, s.metallic, opt).value;
}

inline Vec3 brdf_total(const Vec3& omega, const Vec3& n, const BrdfSample& s, const BrdfOptions& opt = {}) {
    return brdf_diffuse(s) + Vec3::Constant(brdf_specular(omega, n, s, opt));
}

}  // namespace endopbr
