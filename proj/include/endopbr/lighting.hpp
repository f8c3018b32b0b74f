// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "endopbr/common.hpp"

namespace endopbr {

/// Spotlight co-located with the camera plus the output tone exponent.
/// Values are strictly positive; the optimizer works on their logarithms.
struct SpotlightParams {
    Real L0 = 1;
    Real n_exp = 1;
    Real q_exp = 2;
    Real gamma = 2.2;

    static SpotlightParams from_log(Real log_L0, Real log_n, Real log_q, Real log_gamma) {
        return {std::exp(log_L0), std::exp(log_n), std::exp(log_q), std::exp(log_gamma)};
    }

    bool valid() const {
        auto ok = [](Real v) { return v > 0 && std::isfinite(v); };
        return ok(L0) && ok(n_exp) && ok(q_exp) && ok(gamma);
    }
};

inline constexpr Real kMinLightDistance = 1e-6;
inline constexpr Real kGradientClamp = 1e4;

inline Real clamp_gradient(Real g) { return std::clamp(g, -kGradientClamp, kGradientClamp); }

struct LightGeometry {
    Real distance = 0;
    Real cos_theta = 0;
};

inline LightGeometry light_geometry(const Vec3& x, const Vec3& light_pos, const Vec3& light_axis) {
    const Vec3 d = x - light_pos;
    const Real dist = d.norm();
    if (dist < kMinLightDistance) throw Error(ErrorKind::DegenerateGeometry, "point coincides with the light");
    return {dist, d.dot(light_axis) / dist};
}

/// L0 cos^n(theta) / d^q, zero on and behind the light's equatorial plane.
inline Real incident_light(const LightGeometry& g, const SpotlightParams& p) {
    if (!(g.cos_theta > 0)) return 0;
    return p.L0 * std::pow(g.cos_theta, p.n_exp) / std::pow(g.distance, p.q_exp);
}

inline Real incident_light(const Vec3& x, const Vec3& light_pos, const Vec3& light_axis, const SpotlightParams& p) {
    return incident_light(light_geometry(x, light_pos, light_axis), p);
}

/// Gradient of a scalar loss with respect to the three light parameters.
struct LightGradient {
    Real L0 = 0;
    Real n_exp = 0;
    Real q_exp = 0;

    /// Chain rule through the log reparameterization, d/dlog(v) = v d/dv.
    LightGradient to_log(const SpotlightParams& p) const { return {L0 * p.L0, n_exp * p.n_exp, q_exp * p.q_exp}; }
};

/// Backward of incident_light scaled by `upstream` (dLoss/dL_i), with respect
/// to the positive parameters. Zero behind the light.
inline LightGradient incident_light_backward(const LightGeometry& g, const SpotlightParams& p, Real upstream) {
    LightGradient out;
    if (!(g.cos_theta > 0) || upstream == 0) return out;
    const Real falloff = std::pow(g.cos_theta, p.n_exp) / std::pow(g.distance, p.q_exp);
    const Real Li = p.L0 * falloff;
    out.L0 = upstream * falloff;
    out.n_exp = upstream * Li * std::log(g.cos_theta);
    out.q_exp = -upstream * Li * std::log(g.distance);
    return out;
}

inline LightGradient incident_light_backward(const Vec3& x, const Vec3& light_pos, const Vec3& light_axis,
                                             const SpotlightParams& p, Real upstream) {
    return incident_light_backward(light_geometry(x, light_pos, light_axis), p, upstream);
}

/// Componentwise c^gamma (unclamped). Nonpositive inputs map to 0.
inline Vec3 gamma_map_unclamped(const Vec3& c_hdr, Real gamma) {
    Vec3 out;
    for (int k = 0; k < 3; ++k) out[k] = c_hdr[k] > 0 ? std::pow(c_hdr[k], gamma) : Real(0);
    return out;
}

/// Display mapping: c^gamma clamped to [0,1].
inline Vec3 gamma_map(const Vec3& c_hdr, const SpotlightParams& p) {
    Vec3 out = gamma_map_unclamped(c_hdr, p.gamma);
    for (int k = 0; k < 3; ++k) out[k] = clamp01(out[k]);
    return out;
}

}  // namespace endopbr
