// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "endopbr/geometry.hpp"
#include "endopbr/image.hpp"

namespace endopbr {

enum class Split { Train, Test };

/// One posed RGB-D observation.
struct FrameRecord {
    RgbImage8 image;
    DepthMap depth;  // meters, 0 = no measurement
    Pose pose;
    int frame_id = 0;
    Split split = Split::Train;
};

inline std::vector<const FrameRecord*> frames_in_split(const std::vector<FrameRecord>& frames, Split split) {
    std::vector<const FrameRecord*> out;
    for (const auto& f : frames)
        if (f.split == split) out.push_back(&f);
    return out;
}

}  // namespace endopbr
