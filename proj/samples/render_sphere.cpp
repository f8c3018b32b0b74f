// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

// Renders one view of the analytic sphere with a constant material and
// writes it next to a neural-field rendering from a fresh model.

#include <iostream>

#include "endopbr/endopbr.hpp"

int main(int argc, char** argv) {
    using namespace endopbr;
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("sample_out");
    fs::create_directories(out);

    AnalyticSceneSpec spec;
    spec.n_views = 1;
    const Pose pose = analytic_view_pose(spec, 0);
    const DepthMap depth = analytic_depth(spec, pose);

    RenderSettings settings;
    settings.brdf = spec.brdf;
    const RenderedImage truth =
        render_image(pose, depth, spec.K, ConstantMaterial{spec.material}, spec.light, settings);
    write_png_rgb8(out / "constant.png", truth.to_8bit());

    ModelConfig cfg;
    const Model model = initialize_model(cfg, fit_scene_bounds(std::vector<Vec3>{Vec3(-1, -1, -1), Vec3(1, 1, 1)}), 1);
    write_png_rgb8(out / "neural.png", render_image(pose, depth, spec.K, model).to_8bit());
    std::cout << "wrote " << (out / "constant.png").string() << " and " << (out / "neural.png").string() << '\n';
    return 0;
}
