// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "endopbr/common.hpp"

namespace endopbr {

using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixC = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;  // one column per sample
using VectorX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

inline constexpr int kMaterialDim = 5;

/// Views over the three affine layers of the material MLP:
/// in -> hidden (ReLU) -> hidden (ReLU) -> 5 (logistic).
template <typename Scalar>
struct MlpLayersT {
    using Mat = Eigen::Map<std::conditional_t<std::is_const_v<Scalar>, const MatrixR, MatrixR>>;
    using Vec = Eigen::Map<std::conditional_t<std::is_const_v<Scalar>, const VectorX, VectorX>>;
    Mat w0, w1, w2;
    Vec b0, b1, b2;
};
using MlpLayers = MlpLayersT<Real>;
using ConstMlpLayers = MlpLayersT<const Real>;

/// Activations kept from the forward pass; columns are samples.
struct MlpCache {
    MatrixC input;
    MatrixC pre1, pre2;
    MatrixC hidden1, hidden2;
    MatrixC output;  // after the logistic
};

// Coefficient-wise products: every column is reduced in the same order whatever
// the batch width, so outputs do not depend on how samples are chunked.
inline void mlp_forward(const ConstMlpLayers& L, const MatrixC& input, MlpCache& cache) {
    cache.input = input;
    cache.pre1 = L.w0.lazyProduct(input).colwise() + L.b0;
    cache.hidden1 = cache.pre1.cwiseMax(0.0);
    cache.pre2 = L.w1.lazyProduct(cache.hidden1).colwise() + L.b1;
    cache.hidden2 = cache.pre2.cwiseMax(0.0);
    MatrixC raw = L.w2.lazyProduct(cache.hidden2).colwise() + L.b2;
    cache.output = raw.unaryExpr([](Real v) { return sigmoid(v); });
}

/// Backward from dLoss/d(output) (after the logistic). Accumulates weight
/// gradients into `grads` and returns dLoss/d(input).
inline MatrixC mlp_backward(const ConstMlpLayers& L, const MlpCache& cache, const MatrixC& d_output,
                            MlpLayers& grads) {
    MatrixC d_raw = d_output.cwiseProduct(cache.output.cwiseProduct((1.0 - cache.output.array()).matrix()));
    grads.w2.noalias() += d_raw * cache.hidden2.transpose();
    grads.b2 += d_raw.rowwise().sum();
    MatrixC d_pre2 = (L.w2.transpose() * d_raw).cwiseProduct((cache.pre2.array() > 0).cast<Real>().matrix());
    grads.w1.noalias() += d_pre2 * cache.hidden1.transpose();
    grads.b1 += d_pre2.rowwise().sum();
    MatrixC d_pre1 = (L.w1.transpose() * d_pre2).cwiseProduct((cache.pre1.array() > 0).cast<Real>().matrix());
    grads.w0.noalias() += d_pre1 * cache.input.transpose();
    grads.b0 += d_pre1.rowwise().sum();
    return L.w0.transpose() * d_pre1;
}

}  // namespace endopbr
