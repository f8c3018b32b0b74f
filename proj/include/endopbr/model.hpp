// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "endopbr/brdf.hpp"
#include "endopbr/geometry.hpp"
#include "endopbr/hashgrid.hpp"
#include "endopbr/lighting.hpp"
#include "endopbr/mlp.hpp"
#include "endopbr/param_store.hpp"
#include "endopbr/rng.hpp"

namespace endopbr {

struct ModelConfig {
    HashGridConfig hash;
    int hidden = 64;
    BrdfOptions brdf;
    ForwardAxis forward_axis = ForwardAxis::PlusZ;

    void validate() const {
        hash.validate();
        if (hidden < 1) throw Error(ErrorKind::Config, "hidden width must be positive");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Initial light values used before calibration.
struct LightInit {
    Real L0 = 1.0;
    Real n_exp = 1.0;
    Real q_exp = 2.0;
    Real gamma = 2.2;
};

namespace group_names {
inline const std::string kHash = "hash.tables";
inline const std::string kW0 = "mlp.w0", kB0 = "mlp.b0", kW1 = "mlp.w1", kB1 = "mlp.b1", kW2 = "mlp.w2",
                         kB2 = "mlp.b2";
inline const std::string kLogL0 = "light.log_L0", kLogN = "light.log_n_exp", kLogQ = "light.log_q_exp",
                         kLogGamma = "light.log_gamma";
}  // namespace group_names

/// Neural material field (hash grid + MLP), spotlight and tone exponent, all
/// stored in one ParamStore, plus the normalization box of the scene.
class Model {
  public:
    Model() = default;

    Model(ModelConfig cfg, SceneBounds bounds) : cfg_(cfg), bounds_(bounds) {
        cfg_.validate();
        using namespace group_names;
        const std::size_t in = cfg_.hash.output_dim(), h = cfg_.hidden;
        store_.add(kHash, {std::size_t(cfg_.hash.levels), cfg_.hash.table_size, std::size_t(cfg_.hash.features)});
        store_.add(kW0, {h, in});
        store_.add(kB0, {h});
        store_.add(kW1, {h, h});
        store_.add(kB1, {h});
        store_.add(kW2, {std::size_t(kMaterialDim), h});
        store_.add(kB2, {std::size_t(kMaterialDim)});
        store_.add(kLogL0, {1});
        store_.add(kLogN, {1});
        store_.add(kLogQ, {1});
        store_.add(kLogGamma, {1});
    }

    const ModelConfig& config() const { return cfg_; }
    const SceneBounds& bounds() const { return bounds_; }
    void set_bounds(const SceneBounds& b) { bounds_ = b; }

    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

    std::span<const Real> hash_tables() const { return store_.group(kHashIdx).value; }
    std::span<Real> hash_tables() { return store_.group(kHashIdx).value; }

    ConstMlpLayers mlp() const { return layers<const Real>(store_, false); }
    MlpLayers mlp() { return layers<Real>(store_, false); }
    MlpLayers mlp_grad() { return layers<Real>(store_, true); }

    SpotlightParams light() const {
        return SpotlightParams::from_log(scalar(kLogL0Idx), scalar(kLogNIdx), scalar(kLogQIdx), scalar(kLogGammaIdx));
    }

    void set_light(const SpotlightParams& p) {
        store_.group(kLogL0Idx).value[0] = std::log(p.L0);
        store_.group(kLogNIdx).value[0] = std::log(p.n_exp);
        store_.group(kLogQIdx).value[0] = std::log(p.q_exp);
        store_.group(kLogGammaIdx).value[0] = std::log(p.gamma);
    }

    /// Group indices in registration order.
    static constexpr std::size_t kHashIdx = 0, kW0Idx = 1, kB0Idx = 2, kW1Idx = 3, kB1Idx = 4, kW2Idx = 5,
                                 kB2Idx = 6, kLogL0Idx = 7, kLogNIdx = 8, kLogQIdx = 9, kLogGammaIdx = 10;

  private:
    Real scalar(std::size_t idx) const { return store_.group(idx).value[0]; }

    template <typename Scalar, typename Store>
    static MlpLayersT<Scalar> layers(Store& s, bool grad) {
        auto ptr = [&](std::size_t i) -> Scalar* {
            auto& g = s.group(i);
            return grad ? const_cast<Scalar*>(g.grad.data()) : g.value.data();
        };
        auto rows = [&](std::size_t i) { return Eigen::Index(s.group(i).shape[0]); };
        auto cols = [&](std::size_t i) { return Eigen::Index(s.group(i).shape[1]); };
        return {{ptr(kW0Idx), rows(kW0Idx), cols(kW0Idx)},
                {ptr(kW1Idx), rows(kW1Idx), cols(kW1Idx)},
                {ptr(kW2Idx), rows(kW2Idx), cols(kW2Idx)},
                {ptr(kB0Idx), rows(kB0Idx)},
                {ptr(kB1Idx), rows(kB1Idx)},
                {ptr(kB2Idx), rows(kB2Idx)}};
    }

    ModelConfig cfg_;
    SceneBounds bounds_;
    ParamStore store_;
};

inline constexpr Real kHashInitScale = 1e-4;

/// Hash entries uniform in [-1e-4, 1e-4]; MLP weights and biases uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; light at `light`.
/// Starting metallic output. The metallic penalty favours dielectric surfaces,
/// and with a light at the camera the Fresnel term reduces to F0, so light
/// scale, albedo and metallic trade off exactly and only that penalty tells
/// them apart. Starting at the midpoint leaves the optimizer stuck far up
/// that valley; starting near zero begins at the prior's mode.
inline constexpr Real kMetallicInit = 1e-3;

inline Model initialize_model(const ModelConfig& cfg, const SceneBounds& bounds, std::uint64_t seed,
                              const LightInit& light = {}, Real metallic_init = kMetallicInit) {
    if (!(metallic_init > 0 && metallic_init < 1))
        throw Error(ErrorKind::Config, "initial metallic must lie strictly inside (0, 1)");
    Model m(cfg, bounds);
    CounterRng rng(seed, "init");
    for (auto& v : m.store().group(Model::kHashIdx).value) v = rng.uniform(-kHashInitScale, kHashInitScale);
    const std::array<std::pair<std::size_t, std::size_t>, 3> layers{
        {{Model::kW0Idx, Model::kB0Idx}, {Model::kW1Idx, Model::kB1Idx}, {Model::kW2Idx, Model::kB2Idx}}};
    for (auto [w, b] : layers) {
        auto& wg = m.store().group(w);
        const Real bound = 1 / std::sqrt(Real(wg.shape[1]));
        for (auto& v : wg.value) v = rng.uniform(-bound, bound);
        for (auto& v : m.store().group(b).value) v = rng.uniform(-bound, bound);
    }
    m.store().group(Model::kB2Idx).value[4] = std::log(metallic_init / (1 - metallic_init));
    m.set_light({light.L0, light.n_exp, light.q_exp, light.gamma});
    return m;
}

/// Maps the five logistic outputs onto a material record.
inline BrdfSample material_from_output(const Real* o) {
    return {Vec3(o[0], o[1], o[2]), o[3], o[4]};
}

/// Material at a normalized point.
inline BrdfSample predict_material(const Model& model, const Vec3& x_norm) {
    const auto& cfg = model.config();
    MatrixC features(cfg.hash.output_dim(), 1);
    encode(x_norm, model.hash_tables(), cfg.hash, std::span<Real>(features.data(), features.size()));
    MlpCache cache;
    mlp_forward(model.mlp(), features, cache);
    return material_from_output(cache.output.data());
}

/// Batched material prediction at world points (normalized by the model bounds).
inline std::vector<BrdfSample> predict_materials(const Model& model, std::span<const Vec3> x_world) {
    const auto& cfg = model.config();
    const Eigen::Index n = static_cast<Eigen::Index>(x_world.size());
    MatrixC features(cfg.hash.output_dim(), n);
    for (Eigen::Index k = 0; k < n; ++k)
        encode(normalize_point(x_world[k], model.bounds()), model.hash_tables(), cfg.hash,
               std::span<Real>(features.col(k).data(), features.rows()));
    MlpCache cache;
    mlp_forward(model.mlp(), features, cache);
    std::vector<BrdfSample> out(n);
    for (Eigen::Index k = 0; k < n; ++k) out[k] = material_from_output(cache.output.col(k).data());
    return out;
}

}  // namespace endopbr
