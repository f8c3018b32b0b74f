// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "endopbr/frame.hpp"
#include "endopbr/loss.hpp"
#include "endopbr/model.hpp"
#include "endopbr/optim.hpp"
#include "endopbr/parallel.hpp"
#include "endopbr/renderer.hpp"
#include "endopbr/rng.hpp"

namespace endopbr {

/// One supervised pixel: geometry, ground-truth color and the jitter offset
/// (normalized coordinates) used for the albedo smoothness pair.
struct TrainSample {
    Vec3 x;
    Vec3 normal;
    Vec3 cam_center;
    Vec3 light_axis;
    Vec3 gt;
    Vec3 jitter = Vec3::Zero();
};

struct EvalOptions {
    std::size_t chunk = 2048;
    int threads = 1;
    bool with_gradients = true;
    bool with_signature = false;
};

namespace detail {

inline std::uint64_t mix_bits(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ull)); }

/// Per-chunk results. Gradient members are filled only when gradients were
/// requested; they are chunk-local until reduced by backward().
struct ChunkResult {
    Real l1 = 0, metallic = 0, smooth = 0;
    std::uint64_t signature = 0;
    bool has_gradients = false;
    MatrixR gw0, gw1, gw2;
    VectorX gb0, gb1, gb2;
    Real g_log_L0 = 0, g_log_n = 0, g_log_q = 0, g_log_gamma = 0;
    std::vector<CornerSet> corners;  // evals x levels
    MatrixC d_features;              // features x evals
};

struct GradScales {
    Real l1, metallic, smooth;
};

inline ChunkResult evaluate_chunk(const Model& model, std::span<const TrainSample> batch, const GradScales& scale,
                                  const EvalOptions& opt) {
    const auto& cfg = model.config();
    const int levels = cfg.hash.levels;
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index evals = 2 * n;  // [0, n) shading points, [n, 2n) jittered partners
    const SpotlightParams light = model.light();

    ChunkResult out;
    MatrixC features(cfg.hash.output_dim(), evals);
    std::vector<CornerSet> corners(opt.with_gradients ? std::size_t(evals) * levels : 0);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vec3 xn = normalize_point(batch[k].x, model.bounds());
        const Vec3 xj = (xn + batch[k].jitter).unaryExpr([](Real v) { return clamp01(v); });
        auto enc = [&](const Vec3& p, Eigen::Index col) {
            encode(p, model.hash_tables(), cfg.hash, std::span<Real>(features.col(col).data(), features.rows()),
                   opt.with_gradients ? &corners[std::size_t(col) * levels] : nullptr);
        };
        enc(xn, k);
        enc(xj, n + k);
    }

    MlpCache cache;
    mlp_forward(model.mlp(), features, cache);

    MatrixC d_out = MatrixC::Zero(kMaterialDim, evals);
    std::uint64_t sig = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const TrainSample& s = batch[k];
        const BrdfSample mat = material_from_output(cache.output.col(k).data());
        const Vec3 b_jit = cache.output.col(n + k).head<3>();

        Vec3 ldr = Vec3::Zero(), hdr = Vec3::Zero();
        const Vec3 omega = view_direction(s.x, s.cam_center);
        const Real c = omega.dot(s.normal);
        const LightGeometry geo = light_geometry(s.x, s.cam_center, s.light_axis);
        const Real Li = incident_light(geo, light);
        SpecularTerm spec;
        Vec3 f = Vec3::Zero();
        if (c > 0 && Li > 0) {
            spec = brdf_specular_term(c, mat.roughness, mat.metallic, cfg.brdf);
            f = brdf_diffuse(mat) + Vec3::Constant(spec.value);
            hdr = 2 * kPi * Li * c * f;
            ldr = gamma_map_unclamped(hdr, light.gamma);
        }
        const Vec3 resid = ldr - s.gt;
        const Vec3 bdiff = mat.base_color - b_jit;
        out.l1 += resid.cwiseAbs().sum();
        out.metallic += std::abs(mat.metallic);
        out.smooth += bdiff.cwiseAbs().sum();

        if (opt.with_signature) {
            std::uint64_t bits = (c > 0) | ((Li > 0) << 1);
            for (int ch = 0; ch < 3; ++ch) {
                bits |= std::uint64_t(resid[ch] > 0) << (2 + ch);
                bits |= std::uint64_t(resid[ch] == 0) << (5 + ch);
                bits |= std::uint64_t(bdiff[ch] > 0) << (8 + ch);
                bits |= std::uint64_t(hdr[ch] > 0) << (11 + ch);
            }
            bits |= std::uint64_t(c < kGrazingCosine) << 14;
            sig = mix_bits(sig, bits);
        }
        if (!opt.with_gradients) continue;

        auto sgn = [](Real v) { return Real((v > 0) - (v < 0)); };
        Vec3 g_b = Vec3::Zero();
        Real g_r = 0, g_m = scale.metallic * sgn(mat.metallic);
        for (int ch = 0; ch < 3; ++ch) g_b[ch] = scale.smooth * sgn(bdiff[ch]);
        d_out.col(n + k).head<3>() = -g_b;

        if (c > 0 && Li > 0) {
            Vec3 g_hdr = Vec3::Zero();
            Real g_log_gamma = 0;
            for (int ch = 0; ch < 3; ++ch) {
                if (!(hdr[ch] > 0)) continue;
                const Real up = scale.l1 * sgn(resid[ch]);
                g_hdr[ch] = up * clamp_gradient(light.gamma * ldr[ch] / hdr[ch]);
                g_log_gamma += up * ldr[ch] * std::log(hdr[ch]) * light.gamma;
            }
            const Vec3 g_f = 2 * kPi * Li * c * g_hdr;
            const Real g_Li = 2 * kPi * c * g_hdr.dot(f);
            const Real g_f_sum = g_f.sum();
            g_b += (1 - mat.metallic) / kPi * g_f;
            g_m += -g_f.dot(mat.base_color) / kPi + g_f_sum * spec.d_metallic;
            g_r += g_f_sum * spec.d_roughness;

            const LightGradient lg = incident_light_backward(geo, light, g_Li).to_log(light);
            out.g_log_L0 += clamp_gradient(lg.L0);
            out.g_log_n += clamp_gradient(lg.n_exp);
            out.g_log_q += clamp_gradient(lg.q_exp);
            out.g_log_gamma += clamp_gradient(g_log_gamma);
        }
        d_out.col(k).head<3>() = g_b;
        d_out(3, k) = g_r;
        d_out(4, k) = g_m;
    }

    if (opt.with_signature) {
        for (Eigen::Index e = 0; e < evals; ++e) {
            std::uint64_t h = 0;
            for (Eigen::Index r = 0; r < cache.pre1.rows(); ++r) h = h * 2 + (cache.pre1(r, e) > 0);
            for (Eigen::Index r = 0; r < cache.pre2.rows(); ++r) h = h * 3 + (cache.pre2(r, e) > 0);
            sig = mix_bits(sig, h);
        }
        out.signature = sig;
    }

    if (opt.with_gradients) {
        const auto L = model.mlp();
        out.gw0 = MatrixR::Zero(L.w0.rows(), L.w0.cols());
        out.gw1 = MatrixR::Zero(L.w1.rows(), L.w1.cols());
        out.gw2 = MatrixR::Zero(L.w2.rows(), L.w2.cols());
        out.gb0 = VectorX::Zero(L.b0.size());
        out.gb1 = VectorX::Zero(L.b1.size());
        out.gb2 = VectorX::Zero(L.b2.size());
        MlpLayers grads{{out.gw0.data(), out.gw0.rows(), out.gw0.cols()},
                        {out.gw1.data(), out.gw1.rows(), out.gw1.cols()},
                        {out.gw2.data(), out.gw2.rows(), out.gw2.cols()},
                        {out.gb0.data(), out.gb0.size()},
                        {out.gb1.data(), out.gb1.size()},
                        {out.gb2.data(), out.gb2.size()}};
        out.d_features = mlp_backward(L, cache, d_out, grads);
        out.corners = std::move(corners);
        out.has_gradients = true;
    }
    return out;
}

}  // namespace detail

/// Forward pass over a batch. When gradients are requested the result keeps
/// the chunk-local contributions that backward() reduces into the store.
struct BatchEvaluation {
    LossBreakdown loss;
    std::uint64_t signature = 0;
    std::vector<detail::ChunkResult> chunks;

    bool has_gradients() const {
        return !chunks.empty() && std::all_of(chunks.begin(), chunks.end(), [](const auto& c) { return c.has_gradients; });
    }
};

inline BatchEvaluation forward(const Model& model, std::span<const TrainSample> batch, const LossWeights& w,
                               const EvalOptions& opt = {}) {
    if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "training batch is empty");
    const Real n = Real(batch.size());
    const detail::GradScales scale{1 / (3 * n), w.lambda_m / n, w.lambda_b / n};
    const std::size_t chunk = std::max<std::size_t>(opt.chunk, 1);
    const std::size_t count = (batch.size() + chunk - 1) / chunk;

    BatchEvaluation ev;
    ev.chunks.resize(count);
    parallel_for(count, opt.threads, [&](std::size_t c) {
        const std::size_t begin = c * chunk, end = std::min(batch.size(), begin + chunk);
        ev.chunks[c] = detail::evaluate_chunk(model, batch.subspan(begin, end - begin), scale, opt);
    });
    Real l1 = 0, m = 0, smooth = 0;
    for (const auto& c : ev.chunks) {
        l1 += c.l1;
        m += c.metallic;
        smooth += c.smooth;
        ev.signature = detail::mix_bits(ev.signature, c.signature);
    }
    ev.loss = LossBreakdown::combine(l1 / (3 * n), m / n, smooth / n, w);
    return ev;
}

/// Accumulates the recorded gradients into the model's gradient slots, chunk
/// by chunk in batch order, so the result does not depend on thread count.
inline void backward(Model& model, const BatchEvaluation& ev) {
    if (!ev.has_gradients()) throw Error(ErrorKind::MissingContext, "backward called without a recorded forward pass");
    auto& store = model.store();
    const auto& hcfg = model.config().hash;
    auto hash_grad = std::span<Real>(store.group(Model::kHashIdx).grad);
    auto G = model.mlp_grad();
    for (const auto& c : ev.chunks) {
        G.w0 += c.gw0;
        G.w1 += c.gw1;
        G.w2 += c.gw2;
        G.b0 += c.gb0;
        G.b1 += c.gb1;
        G.b2 += c.gb2;
        store.group(Model::kLogL0Idx).grad[0] += c.g_log_L0;
        store.group(Model::kLogNIdx).grad[0] += c.g_log_n;
        store.group(Model::kLogQIdx).grad[0] += c.g_log_q;
        store.group(Model::kLogGammaIdx).grad[0] += c.g_log_gamma;
        for (Eigen::Index e = 0; e < c.d_features.cols(); ++e)
            encode_backward(&c.corners[std::size_t(e) * hcfg.levels],
                            std::span<const Real>(c.d_features.col(e).data(), c.d_features.rows()), hcfg, hash_grad);
    }
}

/// Draws supervised pixels from a set of frames. Pixels without depth or
/// without a usable normal are rejected.
class PixelSampler {
  public:
    PixelSampler(std::vector<const FrameRecord*> frames, const Intrinsics& K, ForwardAxis axis)
        : K_(K), axis_(axis) {
        for (const FrameRecord* f : frames) {
            if (f->depth.width() != K.width || f->depth.height() != K.height || !f->image.same_shape(RgbImage8(K.width, K.height, 3)))
                throw Error(ErrorKind::Config, "frame " + std::to_string(f->frame_id) + " does not match intrinsics");
            std::size_t valid = 0;
            for (int j = 0; j < K.height; ++j)
                for (int i = 0; i < K.width; ++i) valid += normal_at(f->depth, K, i, j).has_value();
            if (valid > 0) frames_.push_back(f);
        }
    }

    std::size_t frame_count() const { return frames_.size(); }
    const FrameRecord& frame(std::size_t k) const { return *frames_[k]; }

    TrainSample sample(std::size_t frame_index, CounterRng& rng) const {
        const FrameRecord& f = *frames_.at(frame_index);
        for (;;) {
            const int i = int(rng.below(K_.width)), j = int(rng.below(K_.height));
            if (auto s = sample_at(f, i, j)) return *s;
        }
    }

    std::optional<TrainSample> sample_at(const FrameRecord& f, int i, int j) const {
        auto n = normal_at(f.depth, K_, i, j);
        if (!n) return std::nullopt;
        TrainSample s;
        s.x = f.pose.to_world(camera_point(i, j, f.depth.at(i, j), K_));
        s.normal = (f.pose.R * *n).normalized();
        s.cam_center = f.pose.center();
        s.light_axis = f.pose.forward(axis_);
        for (int c = 0; c < 3; ++c) s.gt[c] = Real(f.image.at(i, j, c)) / 255;
        return s;
    }

  private:
    Intrinsics K_;
    ForwardAxis axis_;
    std::vector<const FrameRecord*> frames_;
};

inline Vec3 sample_ball(CounterRng& rng, Real radius) {
    for (;;) {
        Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (v.squaredNorm() <= 1) return radius * v;
    }
}

struct TrainConfig {
    int epochs = 1500;
    AdamConfig adam;
    LossWeights weights;
    int pixels_per_iter = 30000;
    int frames_per_iter = 5;
    Real jitter_radius = 0.01;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;
    int threads = 0;
    std::size_t chunk = 2048;
    bool calibrate_light = true;
    int calibration_pixels = 1000;
    LightInit light_init;
    Real metallic_init = kMetallicInit;

    void validate() const {
        adam.validate();
        if (epochs < 0) throw Error(ErrorKind::Config, "epochs must be non-negative");
        if (pixels_per_iter < 1 || frames_per_iter < 1) throw Error(ErrorKind::Config, "sampling counts must be positive");
        if (!(jitter_radius >= 0)) throw Error(ErrorKind::Config, "jitter radius must be non-negative");
        if (weights.lambda_m < 0 || weights.lambda_b < 0) throw Error(ErrorKind::Config, "loss weights must be non-negative");
    }
};

struct TrainLogRow {
    int epoch = 0;
    std::uint64_t iter = 0;
    LossBreakdown loss;
    SpotlightParams light;
};

struct TrainCallbacks {
    std::function<void(const TrainLogRow&)> on_iteration;
    std::function<void(int epoch, const Model&)> on_checkpoint;
};

/// Bounds of the training frames and a freshly initialized model.
inline Model initial_model(const std::vector<FrameRecord>& frames, const Intrinsics& K, const ModelConfig& mcfg,
                           const TrainConfig& tcfg) {
    auto train = frames_in_split(frames, Split::Train);
    struct View {
        const DepthMap& depth;
        const Pose& pose;
    };
    std::vector<View> views;
    for (auto* f : train) views.push_back({f->depth, f->pose});
    if (views.empty()) throw Error(ErrorKind::EmptyScene, "no training frames");
    return initialize_model(mcfg, fit_scene_bounds(views, K), tcfg.seed, tcfg.light_init, tcfg.metallic_init);
}

/// Rescales L0 so the median rendered intensity of a probe batch matches the
/// median ground-truth intensity. Rendered values scale as L0^gamma.
inline void calibrate_light(Model& model, const PixelSampler& sampler, int pixels, std::uint64_t seed) {
    CounterRng rng(seed, "calibrate");
    std::vector<TrainSample> probe;
    for (int k = 0; k < pixels; ++k) probe.push_back(sampler.sample(rng.below(sampler.frame_count()), rng));
    std::vector<Vec3> xs;
    for (const auto& s : probe) xs.push_back(s.x);
    const auto mats = predict_materials(model, xs);
    SpotlightParams unit = model.light();
    unit.L0 = 1;
    std::vector<Real> pred, gt;
    for (std::size_t k = 0; k < probe.size(); ++k) {
        const auto& s = probe[k];
        PixelShadingInput in{s.x, s.normal, view_direction(s.x, s.cam_center), s.cam_center, s.light_axis};
        pred.push_back(shade_pixel(in, mats[k], unit, model.config().brdf).ldr.mean());
        gt.push_back(s.gt.mean());
    }
    auto median = [](std::vector<Real> v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    const Real mp = median(pred), mg = median(gt);
    if (mp > 0 && mg > 0) {
        unit.L0 = std::pow(mg / mp, 1 / unit.gamma);
        model.set_light(unit);
    }
}

inline std::size_t iterations_per_epoch(std::size_t train_frames, int frames_per_iter) {
    return (train_frames + frames_per_iter - 1) / frames_per_iter;
}

/// Fits the model to the training split. Each iteration draws up to
/// `frames_per_iter` distinct frames and an equal share of the pixel budget
/// from each, then takes one Adam step.
inline void train(Model& model, const std::vector<FrameRecord>& frames, const Intrinsics& K, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks = {}) {
    cfg.validate();
    PixelSampler sampler(frames_in_split(frames, Split::Train), K, model.config().forward_axis);
    if (sampler.frame_count() == 0) throw Error(ErrorKind::EmptyScene, "training frames have no valid pixels");
    if (cfg.epochs == 0) return;

    const int threads = resolve_threads(cfg.threads);
    if (cfg.calibrate_light) calibrate_light(model, sampler, cfg.calibration_pixels, cfg.seed);

    AdamState adam(model.store());
    model.store().zero_grad();
    CounterRng frame_rng(cfg.seed, "frames"), pixel_rng(cfg.seed, "pixels"), jitter_rng(cfg.seed, "jitter");
    const std::size_t per_epoch = iterations_per_epoch(sampler.frame_count(), cfg.frames_per_iter);
    const std::size_t nframes = std::min<std::size_t>(cfg.frames_per_iter, sampler.frame_count());
    const int per_frame = std::max(1, cfg.pixels_per_iter / int(nframes));
    EvalOptions eopt{cfg.chunk, threads, true, false};

    std::vector<std::size_t> order(sampler.frame_count());
    std::vector<TrainSample> batch;
    std::uint64_t iter = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t it = 0; it < per_epoch; ++it, ++iter) {
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
            for (std::size_t k = 0; k < nframes; ++k)
                std::swap(order[k], order[k + frame_rng.below(order.size() - k)]);
            batch.clear();
            for (std::size_t k = 0; k < nframes; ++k)
                for (int p = 0; p < per_frame; ++p) {
                    TrainSample s = sampler.sample(order[k], pixel_rng);
                    s.jitter = sample_ball(jitter_rng, cfg.jitter_radius);
                    batch.push_back(s);
                }
            const SpotlightParams light = model.light();
            const BatchEvaluation ev = forward(model, batch, cfg.weights, eopt);
            backward(model, ev);
            adam_step(model.store(), adam, cfg.adam);
            if (callbacks.on_iteration) callbacks.on_iteration({epoch, iter, ev.loss, light});
        }
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && callbacks.on_checkpoint)
            callbacks.on_checkpoint(epoch, model);
    }
}

struct GroupCheck {
    std::string name;
    Real max_rel_error = 0;
    std::size_t probes = 0;
    std::size_t skipped = 0;
};

struct GradCheckReport {
    std::vector<GroupCheck> groups;

    bool passed(Real tol = 1e-4) const {
        return std::all_of(groups.begin(), groups.end(), [&](const auto& g) { return g.max_rel_error < tol; });
    }
};

inline constexpr Real kGradCheckStep = 1e-5;
inline constexpr Real kGradCheckFloor = 1e-6;

/// |a - b| / max(|a|, |b|, 1e-6).
inline Real relative_error(Real analytic, Real numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
}

/// Compares analytic gradients with central differences on `n_samples`
/// single-pixel losses. Probes whose +-h evaluations cross a kink of the loss
/// (a sign change of an L1 residual, a ReLU switching) are skipped and counted.
inline GradCheckReport grad_check(Model& model, const std::vector<FrameRecord>& frames, const Intrinsics& K,
                                  const LossWeights& weights, std::size_t n_samples, std::uint64_t seed,
                                  Real jitter_radius = 0.01) {
    GradCheckReport report;
    if (n_samples == 0) return report;
    auto pool = frames_in_split(frames, Split::Train);
    if (pool.empty())
        for (const auto& f : frames) pool.push_back(&f);
    PixelSampler sampler(pool, K, model.config().forward_axis);
    if (sampler.frame_count() == 0) throw Error(ErrorKind::EmptyScene, "no valid pixels for gradient check");

    enum { kHash, kMlp, kL0, kN, kQ, kGamma, kCount };
    report.groups = {{"hash"}, {"mlp"}, {"L0"}, {"n_exp"}, {"q_exp"}, {"gamma"}};
    CounterRng rng(seed, "gradcheck");
    const EvalOptions fwd{1, 1, false, true};
    const auto& hcfg = model.config().hash;

    for (std::size_t s = 0; s < n_samples; ++s) {
        TrainSample sample = sampler.sample(rng.below(sampler.frame_count()), rng);
        sample.jitter = sample_ball(rng, jitter_radius);
        const std::span<const TrainSample> batch(&sample, 1);

        model.store().zero_grad();
        const BatchEvaluation base = forward(model, batch, weights, {1, 1, true, true});
        backward(model, base);

        struct Probe {
            int group;
            std::size_t param_group;
            std::size_t index;
        };
        std::vector<Probe> probes;
        HashContext ctx;
        encode(normalize_point(sample.x, model.bounds()), model.hash_tables(), hcfg, &ctx);
        for (int k = 0; k < 2; ++k) {
            const int l = int(rng.below(hcfg.levels));
            const int f = int(rng.below(hcfg.features));
            const auto& cs = ctx[l];
            const int best = int(std::max_element(cs.weight.begin(), cs.weight.end()) - cs.weight.begin());
            probes.push_back({kHash, Model::kHashIdx, (std::size_t(l) * hcfg.table_size + cs.entry[best]) * hcfg.features + f});
        }
        for (std::size_t g = Model::kW0Idx; g <= Model::kB2Idx; ++g)
            probes.push_back({kMlp, g, rng.below(model.store().group(g).size())});
        probes.push_back({kL0, Model::kLogL0Idx, 0});
        probes.push_back({kN, Model::kLogNIdx, 0});
        probes.push_back({kQ, Model::kLogQIdx, 0});
        probes.push_back({kGamma, Model::kLogGammaIdx, 0});

        for (const Probe& p : probes) {
            auto& grp = model.store().group(p.param_group);
            const Real analytic = grp.grad[p.index];
            const Real orig = grp.value[p.index];
            grp.value[p.index] = orig + kGradCheckStep;
            const BatchEvaluation plus = forward(model, batch, weights, fwd);
            grp.value[p.index] = orig - kGradCheckStep;
            const BatchEvaluation minus = forward(model, batch, weights, fwd);
            grp.value[p.index] = orig;
            GroupCheck& gc = report.groups[p.group];
            if (plus.signature != base.signature || minus.signature != base.signature) {
                ++gc.skipped;
                continue;
            }
            const Real numeric = (plus.loss.total - minus.loss.total) / (2 * kGradCheckStep);
            gc.max_rel_error = std::max(gc.max_rel_error, relative_error(analytic, numeric));
            ++gc.probes;
        }
    }
    model.store().zero_grad();
    return report;
}

}  // namespace endopbr
