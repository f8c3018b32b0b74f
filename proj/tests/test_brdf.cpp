// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

namespace endopbr {
namespace {

constexpr Real kInvPi = 0.31830988618379067;

TEST(BrdfDiffuse, Examples) {
    EXPECT_NEAR((brdf_diffuse({Vec3::Ones(), 0.5, 0.0}) - Vec3::Constant(kInvPi)).norm(), 0, 1e-15);
    EXPECT_EQ(brdf_diffuse({Vec3(0.3, 0.9, 0.1), 0.5, 1.0}), Vec3::Zero());
    const Vec3 f = brdf_diffuse({Vec3(0.9, 0.6, 0.3), 0.2, 0.5});
    EXPECT_NEAR(f.x(), 0.1432, 5e-5);
    EXPECT_NEAR(f.y(), 0.0955, 5e-5);
    EXPECT_NEAR(f.z(), 0.0477, 5e-5);
}

TEST(BrdfSpecular, HeadOnValues) {
    const Vec3 n(0, 0, 1);
    // r = 1: alpha = 1 so D = 1/pi; k = 1/2 so G1(1) = 1
    EXPECT_NEAR(brdf_specular(n, n, {Vec3::Ones(), 1.0, 0.0}), 0.04 * kInvPi, 1e-15);
    EXPECT_NEAR(brdf_specular(n, n, {Vec3::Ones(), 1.0, 1.0}), kInvPi, 1e-15);
    BrdfOptions f4;
    f4.factor4 = true;
    EXPECT_NEAR(brdf_specular(n, n, {Vec3::Ones(), 1.0, 1.0}, f4), kInvPi / 4, 1e-15);
}

TEST(BrdfSpecular, GrazingAndBackfacingAreZero) {
    const Vec3 n(0, 0, 1);
    EXPECT_EQ(brdf_specular(Vec3(1, 0, 0), n, {Vec3::Ones(), 0.5, 0.5}), 0);
    EXPECT_EQ(brdf_specular(Vec3(0, 0, -1), n, {Vec3::Ones(), 0.5, 0.5}), 0);
    // Smith G ~ c^2 cancels the c^2 denominator, so the lobe plateaus near
    // grazing; below the 1e-4 clamp it falls to zero.
    const Real plateau = brdf_specular_term(1e-4, 0.5, 0.5).value;
    for (Real c : {1e-1, 1e-2, 1e-3}) {
        const Real v = brdf_specular_term(c, 0.5, 0.5).value;
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_LE(v, 1.01 * plateau);
    }
    Real prev = plateau;
    for (Real c : {1e-5, 1e-6, 1e-9}) {
        const Real v = brdf_specular_term(c, 0.5, 0.5).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-6);
}

// Independent evaluation of the same closed forms.
Real specular_oracle(Real c, Real r, Real m) {
    const Real a = r * r;
    const Real D = a * a / (kPi * std::pow(c * c * (a * a - 1) + 1, 2));
    const Real F0 = 0.04 * (1 - m) + m;
    const Real F = F0 + (1 - F0) * std::pow(1 - c, 5);
    const Real k = (r + 1) * (r + 1) / 8;
    const Real G1 = c / (c * (1 - k) + k);
    return D * F * G1 * G1 / (c * c);
}

TEST(BrdfSpecular, MatchesClosedFormOracle) {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<Real> u(0, 1), uc(1e-3, 1);
    for (int k = 0; k < 1000; ++k) {
        const Real c = uc(g), r = u(g), m = u(g);
        const Real want = specular_oracle(c, r, m);
        EXPECT_NEAR(brdf_specular_term(c, r, m).value, want, 1e-12 * std::max(1.0, want));
    }
}

TEST(BrdfTotal, Examples) {
    const Vec3 n(0, 0, 1);
    EXPECT_NEAR((brdf_total(n, n, {Vec3(0.2, 0.4, 0.6), 1.0, 1.0}) - Vec3::Constant(kInvPi)).norm(), 0, 1e-15);
    const Vec3 f = brdf_total(n, n, {Vec3::Ones(), 1.0, 0.0});
    EXPECT_NEAR(f.x(), 1.04 * kInvPi, 1e-15);
    EXPECT_NEAR(f.x(), 0.3310, 5e-5);
    EXPECT_EQ(f.x(), f.z());
}

TEST(BrdfTotal, NonNegativeAndWhiteSpecularProperty) {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<Real> u(0, 1);
    for (int k = 0; k < 2000; ++k) {
        const Vec3 n = testing::random_unit(g), w = testing::random_unit(g);
        const BrdfSample s{Vec3(u(g), u(g), u(g)), u(g), u(g)};
        const Vec3 f = brdf_total(w, n, s);
        EXPECT_GE(f.minCoeff(), 0);
        const Vec3 spec = f - brdf_diffuse(s);
        EXPECT_NEAR(spec.x(), spec.y(), 1e-12 * (1 + spec.x()));
        EXPECT_NEAR(spec.x(), spec.z(), 1e-12 * (1 + spec.x()));
    }
}

TEST(BrdfSpecular, AnalyticPartialsMatchFiniteDifferences) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<Real> u(0.05, 0.95), uc(0.02, 0.98);
    const Real h = 1e-6;
    for (bool f4 : {false, true}) {
        const BrdfOptions opt{f4};
        for (int k = 0; k < 100; ++k) {
            const Real c = uc(g), r = u(g), m = u(g);
            const SpecularTerm t = brdf_specular_term(c, r, m, opt);
            const Real dr = (brdf_specular_term(c, r + h, m, opt).value - brdf_specular_term(c, r - h, m, opt).value) / (2 * h);
            const Real dm = (brdf_specular_term(c, r, m + h, opt).value - brdf_specular_term(c, r, m - h, opt).value) / (2 * h);
            EXPECT_LE(std::abs(t.d_roughness - dr) / std::max({std::abs(dr), std::abs(t.d_roughness), 1e-6}), 1e-4);
            EXPECT_LE(std::abs(t.d_metallic - dm) / std::max({std::abs(dm), std::abs(t.d_metallic), 1e-6}), 1e-4);
        }
    }
}

}  // namespace
}  // namespace endopbr
