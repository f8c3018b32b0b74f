// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <utility>

#include "endopbr/common.hpp"

namespace endopbr {

struct LossWeights {
    Real lambda_m = 1e-4;
    Real lambda_b = 1e-3;
};

struct LossBreakdown {
    Real total = 0;
    Real l1 = 0;
    Real metallic_penalty = 0;
    Real albedo_smoothness = 0;

    static LossBreakdown combine(Real l1, Real metallic, Real smoothness, const LossWeights& w) {
        return {l1 + w.lambda_m * metallic + w.lambda_b * smoothness, l1, metallic, smoothness};
    }
};

using AlbedoPair = std::pair<Vec3, Vec3>;

/// Photometric L1 (mean over pixels and channels) plus mean |m| and the mean
/// L1 distance between albedo at a point and at a jittered neighbor.
inline LossBreakdown compute_loss(std::span<const Vec3> pred, std::span<const Vec3> gt, std::span<const Real> metallic,
                                  std::span<const AlbedoPair> albedo_pairs, const LossWeights& w = {}) {
    if (pred.empty() || metallic.empty() || albedo_pairs.empty())
        throw Error(ErrorKind::EmptyBatch, "loss needs a non-empty batch");
    if (pred.size() != gt.size() || pred.size() != metallic.size() || pred.size() != albedo_pairs.size())
        throw Error(ErrorKind::Config, "loss batch components differ in length");
    Real l1 = 0, m = 0, smooth = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        l1 += (pred[k] - gt[k]).cwiseAbs().sum();
        m += std::abs(metallic[k]);
        smooth += (albedo_pairs[k].first - albedo_pairs[k].second).cwiseAbs().sum();
    }
    const Real n = Real(pred.size());
    return LossBreakdown::combine(l1 / (3 * n), m / n, smooth / n, w);
}

}  // namespace endopbr
