// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#include "shading_oracle.hpp"
#include "test_util.hpp"

namespace endopbr {
namespace {

PixelShadingInput head_on() {
    return {Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(0, 0, -1), Vec3::Zero(), Vec3(0, 0, 1)};
}

TEST(ShadePixel, UnitDiffuseHeadOn) {
    // m = 1, r = 1 at c = 1 gives f = 1/pi on every channel
    const ShadeResult r = shade_pixel(head_on(), {Vec3(0.3, 0.6, 0.9), 1.0, 1.0}, {1, 1, 2, 1});
    EXPECT_NEAR((r.hdr - Vec3::Constant(2)).norm(), 0, 1e-14);
    EXPECT_EQ(r.display(), Vec3::Ones());
    EXPECT_NEAR(r.ldr.x(), 2, 1e-14);
}

TEST(ShadePixel, GrazingAndUnlitAreBlack) {
    PixelShadingInput in = head_on();
    in.normal = Vec3(1, 0, 0);
    EXPECT_EQ(shade_pixel(in, {Vec3::Ones(), 0.5, 0.0}, {}).hdr, Vec3::Zero());
    in = head_on();
    in.light_axis = Vec3(0, 0, -1);  // light faces away
    EXPECT_EQ(shade_pixel(in, {Vec3::Ones(), 0.5, 0.0}, {}).hdr, Vec3::Zero());
}

TEST(ShadePixel, BatchSizeMismatchThrows) {
    std::vector<PixelShadingInput> in(2, head_on());
    std::vector<BrdfSample> s(1);
    std::vector<ShadeResult> out(2);
    EXPECT_THROW(shade_pixels(in, s, {}, {}, out), Error);
}

oracle::ShadingCase random_case(std::mt19937_64& g) {
    std::uniform_real_distribution<Real> u(0, 1), ud(0.05, 3), ue(0.2, 4);
    oracle::ShadingCase s;
    const Vec3 cam(u(g) - 0.5, u(g) - 0.5, u(g) - 0.5);
    const Vec3 axis = testing::random_unit(g);
    // point roughly in front of the light so most cases are lit
    Vec3 dir = (axis + 0.8 * testing::random_unit(g)).normalized();
    const Vec3 x = cam + ud(g) * dir;
    Vec3 n = testing::random_unit(g);
    if (n.dot(cam - x) < 0 && u(g) < 0.8) n = -n;
    for (int a = 0; a < 3; ++a) {
        s.x[a] = x[a];
        s.n[a] = n[a];
        s.cam[a] = cam[a];
        s.axis[a] = axis[a];
        s.base[a] = u(g);
    }
    s.rough = u(g);
    s.metal = u(g);
    s.L0 = ue(g);
    s.n_exp = ue(g);
    s.q_exp = ue(g);
    s.gamma = ue(g);
    s.factor4 = u(g) < 0.2;
    return s;
}

TEST(ShadePixel, AgreesWithScalarOracle) {
    std::mt19937_64 g(4);
    for (int k = 0; k < 2000; ++k) {
        const auto s = random_case(g);
        const Vec3 x(s.x[0], s.x[1], s.x[2]), cam(s.cam[0], s.cam[1], s.cam[2]);
        const PixelShadingInput in{x, Vec3(s.n[0], s.n[1], s.n[2]), view_direction(x, cam), cam,
                                   Vec3(s.axis[0], s.axis[1], s.axis[2])};
        const ShadeResult r = shade_pixel(in, {Vec3(s.base[0], s.base[1], s.base[2]), s.rough, s.metal},
                                          {s.L0, s.n_exp, s.q_exp, s.gamma}, {s.factor4});
        const auto want = oracle::shade(s);
        for (int c = 0; c < 3; ++c) {
            // 1e-6 absolute, widened to double resolution for very bright pixels
            EXPECT_NEAR(r.hdr[c], want[c], std::max(1e-6, 1e-12 * std::abs(want[c])));
            EXPECT_NEAR(r.ldr[c], want[3 + c], std::max(1e-6, 1e-12 * std::abs(want[3 + c])));
            EXPECT_GE(r.hdr[c], 0);
        }
    }
}

TEST(RenderImage, AllInvalidDepthIsBlack) {
    const Intrinsics K{20, 20, 8, 8, 16, 16};
    const RenderedImage img = render_image(Pose{}, DepthMap(16, 16, 1), K, ConstantMaterial{}, SpotlightParams{});
    for (Real v : img.ldr.data()) EXPECT_EQ(v, 0);
    for (auto v : img.valid.data()) EXPECT_EQ(v, 0);
}

TEST(RenderImage, ShapeMismatchIsConfigError) {
    const Intrinsics K{20, 20, 8, 8, 16, 16};
    try {
        render_image(Pose{}, DepthMap(15, 16, 1, 1.0), K, ConstantMaterial{}, SpotlightParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
}

TEST(RenderImage, AnalyticSphereMatchesPerPixelOracle) {
    const AnalyticSceneSpec spec = testing::small_sphere(3);
    const Pose pose = analytic_view_pose(spec, 1);
    const DepthMap depth = analytic_depth(spec, pose);
    RenderSettings rs;
    const RenderedImage img = render_image(pose, depth, spec.K, ConstantMaterial{spec.material}, spec.light, rs);
    const NormalMap nm = normals_from_depth(depth, spec.K, pose);
    std::size_t checked = 0;
    for (int j = 0; j < spec.K.height; ++j)
        for (int i = 0; i < spec.K.width; ++i) {
            if (!nm.valid.at(i, j)) {
                EXPECT_EQ(img.hdr.at(i, j, 0), 0);
                continue;
            }
            const Vec3 x = pose.to_world(camera_point(i, j, depth.at(i, j), spec.K));
            const Vec3 n = nm.at(i, j), ax = pose.forward();
            oracle::ShadingCase s{{x.x(), x.y(), x.z()},
                                  {n.x(), n.y(), n.z()},
                                  {pose.t.x(), pose.t.y(), pose.t.z()},
                                  {ax.x(), ax.y(), ax.z()},
                                  {0.7, 0.3, 0.2},
                                  0.5,
                                  0.0,
                                  5.0,
                                  2.0,
                                  2.0,
                                  2.2};
            const auto want = oracle::shade(s);
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(img.hdr.at(i, j, c), want[c], 1e-6);
                EXPECT_NEAR(img.ldr.at(i, j, c), clamp01(want[3 + c]), 1e-6);
            }
            ++checked;
        }
    EXPECT_GT(checked, 100u);
}

TEST(RenderImage, DeterministicAndIndependentOfChunking) {
    const AnalyticSceneSpec spec = testing::small_sphere(2);
    const Pose pose = analytic_view_pose(spec, 0);
    const DepthMap depth = analytic_depth(spec, pose);
    const std::vector<Vec3> corners{Vec3::Constant(-1.1), Vec3::Constant(1.1)};
    const Model model = initialize_model(testing::small_model_config(), fit_scene_bounds(corners), 3);
    const RenderedImage a = render_image(pose, depth, spec.K, model);
    const RenderedImage b = render_image(pose, depth, spec.K, model);
    EXPECT_EQ(a.ldr, b.ldr);
    for (std::size_t chunk : {1u, 7u, 100u}) {
        const RenderedImage c = render_image(pose, depth, spec.K, model, chunk);
        EXPECT_EQ(a.hdr, c.hdr) << "chunk " << chunk;
    }
}

TEST(RenderImage, AdjustedMaterialScalesAndClamps) {
    const ConstantMaterial base{{Vec3(0.5, 0.9, 0.1), 0.8, 0.2}};
    const AdjustedMaterial<ConstantMaterial> adj{base, 1.5, 0.3};
    const std::vector<Vec3> xs(1, Vec3::Zero());
    const BrdfSample s = adj.materials(xs)[0];
    EXPECT_NEAR((s.base_color - Vec3(0.75, 1.0, 0.15)).norm(), 0, 1e-15);
    EXPECT_EQ(s.roughness, 1.0);
    EXPECT_EQ(s.metallic, 0.2);
}

struct SplatSource {
    DepthMap depth;
    Pose pose;
};

TEST(SplatDepth, SelfPoseReproducesSourceDepth) {
    const AnalyticSceneSpec spec = testing::small_sphere(4);
    std::vector<SplatSource> src;
    for (int k = 0; k < 4; ++k) {
        const Pose p = analytic_view_pose(spec, k);
        src.push_back({analytic_depth(spec, p), p});
    }
    const DepthMap out = splat_depth(src[1].pose, src, spec.K);
    std::size_t valid = 0, close = 0;
    for (int j = 0; j < spec.K.height; ++j)
        for (int i = 0; i < spec.K.width; ++i) {
            const Real z = src[1].depth.at(i, j);
            if (!depth_valid(z)) continue;
            ++valid;
            close += std::abs(out.at(i, j) - z) <= 0.01 * z;
        }
    ASSERT_GT(valid, 0u);
    EXPECT_GE(Real(close), 0.95 * Real(valid));
}

TEST(SplatDepth, SinglePointFillsOneRing) {
    const Intrinsics K{10, 10, 5, 5, 11, 11};
    SplatSource s{DepthMap(11, 11, 1), Pose{}};
    s.depth.at(5, 5) = 2.0;
    const std::vector<SplatSource> src{s};
    const DepthMap out = splat_depth(Pose{}, src, K);
    EXPECT_EQ(out.at(5, 5), 2.0);
    std::size_t valid = 0;
    for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i)
            if (out.at(i, j) > 0) {
                ++valid;
                EXPECT_LE(std::max(std::abs(i - 5), std::abs(j - 5)), 1);
                EXPECT_EQ(out.at(i, j), 2.0);
            }
    EXPECT_EQ(valid, 9u);
}

TEST(SplatDepth, NearerPointWins) {
    const Intrinsics K{10, 10, 5, 5, 11, 11};
    SplatSource far{DepthMap(11, 11, 1), Pose{}}, near{DepthMap(11, 11, 1), Pose{}};
    far.depth.at(5, 5) = 3.0;
    near.depth.at(5, 5) = 1.0;
    for (const auto& order : {std::vector<SplatSource>{far, near}, std::vector<SplatSource>{near, far}})
        EXPECT_EQ(splat_depth(Pose{}, order, K).at(5, 5), 1.0);
}

TEST(SplatDepth, EmptyCloudThrows) {
    const Intrinsics K{10, 10, 5, 5, 11, 11};
    const std::vector<SplatSource> src{{DepthMap(11, 11, 1), Pose{}}};
    try {
        splat_depth(Pose{}, src, K);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyScene);
    }
}

}  // namespace
}  // namespace endopbr
