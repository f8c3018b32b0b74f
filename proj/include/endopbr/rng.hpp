// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "endopbr/common.hpp"

namespace endopbr {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// FNV-1a, used to derive stream ids from names.
inline constexpr std::uint64_t stream_id(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (seed, stream, i), so streams can be split by purpose without coupling.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::string_view stream)
        : key_(splitmix64(seed ^ splitmix64(stream_id(stream)))) {}
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream))) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    /// Uniform in [0, 1).
    Real uniform() { return Real(next_u64() >> 11) * 0x1.0p-53; }
    Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do v = next_u64();
        while (v >= limit);
        return v % n;
    }

    Real normal() {
        const Real u1 = 1 - uniform();
        const Real u2 = uniform();
        return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
    }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace endopbr
