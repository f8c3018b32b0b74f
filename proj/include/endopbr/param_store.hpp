// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "endopbr/common.hpp"

namespace endopbr {

/// One named learnable tensor and its same-shape gradient slot.
struct ParamGroup {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<Real> value;
    std::vector<Real> grad;

    std::size_t size() const { return value.size(); }
};

/// Flat registry of learnable tensors. Shapes are fixed at registration.
class ParamStore {
  public:
    std::size_t add(std::string name, std::vector<std::size_t> shape, Real fill = 0) {
        if (find(name) >= 0) throw Error(ErrorKind::Config, "duplicate parameter group '" + name + "'");
        const std::size_t n =
            std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>());
        groups_.push_back({std::move(name), std::move(shape), std::vector<Real>(n, fill), std::vector<Real>(n, 0)});
        return groups_.size() - 1;
    }

    std::ptrdiff_t find(const std::string& name) const {
        for (std::size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].name == name) return static_cast<std::ptrdiff_t>(i);
        return -1;
    }

    ParamGroup& group(std::size_t i) { return groups_.at(i); }
    const ParamGroup& group(std::size_t i) const { return groups_.at(i); }

    ParamGroup& group(const std::string& name) {
        auto i = find(name);
        if (i < 0) throw Error(ErrorKind::Config, "unknown parameter group '" + name + "'");
        return groups_[i];
    }
    const ParamGroup& group(const std::string& name) const { return const_cast<ParamStore*>(this)->group(name); }

    std::span<ParamGroup> groups() { return groups_; }
    std::span<const ParamGroup> groups() const { return groups_; }

    void zero_grad() {
        for (auto& g : groups_) std::fill(g.grad.begin(), g.grad.end(), Real(0));
    }

    std::uint64_t step = 0;

  private:
    std::vector<ParamGroup> groups_;
};

}  // namespace endopbr
