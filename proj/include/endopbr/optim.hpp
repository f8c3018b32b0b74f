// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "endopbr/param_store.hpp"

namespace endopbr {

struct AdamConfig {
    Real lr = 1e-4;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real eps = 1e-8;

    void validate() const {
        if (!(lr > 0)) throw Error(ErrorKind::Config, "learning rate must be positive");
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
            throw Error(ErrorKind::Config, "Adam betas must lie in [0, 1)");
        if (!(eps > 0)) throw Error(ErrorKind::Config, "Adam epsilon must be positive");
    }
};

/// First and second moments, one array per parameter group.
struct AdamState {
    std::vector<std::vector<Real>> m, v;

    explicit AdamState(const ParamStore& store) {
        for (const auto& g : store.groups()) {
            m.emplace_back(g.size(), 0);
            v.emplace_back(g.size(), 0);
        }
    }
};

/// Bias-corrected Adam update; increments the step counter and zeroes the
/// gradient slots. Throws before touching anything if a gradient is not finite.
inline void adam_step(ParamStore& store, AdamState& state, const AdamConfig& cfg) {
    auto groups = store.groups();
    if (state.m.size() != groups.size()) throw Error(ErrorKind::Config, "Adam state does not match parameter store");
    using Arr = Eigen::Map<Eigen::ArrayXd>;
    for (auto& g : groups) {
        // g - g is 0 for finite values and NaN otherwise; the sum vectorizes.
        const Arr grad(g.grad.data(), Eigen::Index(g.grad.size()));
        if (std::isfinite((grad - grad).sum())) continue;
        for (std::size_t i = 0; i < g.grad.size(); ++i)
            if (!std::isfinite(g.grad[i]))
                throw Error(ErrorKind::Numeric, "non-finite gradient in parameter group '" + g.name + "' at index " +
                                                    std::to_string(i));
    }

    const auto t = static_cast<Real>(++store.step);
    const Real c1 = 1 - std::pow(cfg.beta1, t);
    const Real c2 = 1 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        auto& g = groups[k];
        const auto size = Eigen::Index(g.value.size());
        constexpr Eigen::Index kBlock = 2048;  // keeps the four streams in L1/L2 between statements
        for (Eigen::Index at = 0; at < size; at += kBlock) {
            const Eigen::Index n = std::min(kBlock, size - at);
            Arr value(g.value.data() + at, n), grad(g.grad.data() + at, n);
            Arr m(state.m[k].data() + at, n), v(state.v[k].data() + at, n);
            m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1 - cfg.beta2) * grad.square();
            value -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
            grad.setZero();
        }
    }
}

}  // namespace endopbr
