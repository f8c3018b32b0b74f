// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace endopbr {

using Real = double;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr Real kPi = std::numbers::pi_v<Real>;

enum class ErrorKind {
    InvalidDepth,
    DegenerateGeometry,
    EmptyScene,
    EmptyBatch,
    Config,
    Load,
    Parse,
    Numeric,
    MissingContext,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidDepth: return "invalid depth";
        case ErrorKind::DegenerateGeometry: return "degenerate geometry";
        case ErrorKind::EmptyScene: return "empty scene";
        case ErrorKind::EmptyBatch: return "empty batch";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Load: return "load error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Numeric: return "numeric error";
        case ErrorKind::MissingContext: return "missing forward context";
    }
    return "error";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Validation-type failures (bad input, bad config) as opposed to
    /// failures that happen while computing.
    bool is_validation() const noexcept {
        switch (kind_) {
            case ErrorKind::Config:
            case ErrorKind::Load:
            case ErrorKind::Parse:
            case ErrorKind::EmptyBatch:
            case ErrorKind::EmptyScene:
                return true;
            default:
                return false;
        }
    }

  private:
    ErrorKind kind_;
};

inline Real clamp01(Real v) { return v < 0 ? Real(0) : (v > 1 ? Real(1) : v); }

inline Real sigmoid(Real v) { return Real(1) / (Real(1) + std::exp(-v)); }

}  // namespace endopbr
