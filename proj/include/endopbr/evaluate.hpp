// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "endopbr/dataset.hpp"
#include "endopbr/metrics.hpp"
#include "endopbr/renderer.hpp"

namespace endopbr {

/// PSNR and SSIM of every held-out frame, rendered at its measured depth. The
/// prediction is quantized to 8 bits like the ground truth, and only pixels
/// with a usable depth and normal are scored.
inline EvalReport evaluate_test_split(const Model& model, const Dataset& ds) {
    const auto test = frames_in_split(ds.frames, Split::Test);
    if (test.empty()) throw Error(ErrorKind::EmptyScene, "dataset has an empty test split");
    EvalReport report;
    for (const FrameRecord* f : test) {
        const RenderedImage r = render_image(f->pose, f->depth, ds.intrinsics(), model);
        const RgbImageF pred = to_float(r.to_8bit()), gt = to_float(f->image);
        report.frames.push_back({f->frame_id, psnr(pred, gt, r.valid), ssim(pred, gt, r.valid)});
    }
    return report;
}

}  // namespace endopbr
