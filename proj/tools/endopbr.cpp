// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: synth, train, render, eval, augment, gradcheck.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "endopbr/endopbr.hpp"

namespace {

using namespace endopbr;

constexpr const char* kVersion = "endopbr 0.1.0";

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Training/evaluation settings. Defaults follow the reference protocol:
/// Adam(1e-4, 0.9, 0.999), lambda_m = 1e-4, lambda_b = 1e-3, 1500 epochs,
/// 30k pixels from 5 frames per iteration.
struct RunConfig {
    std::string data;
    std::string out = "run";
    std::uint64_t seed = 0;
    int epochs = 1500;
    Real lr = 1e-4;
    Real lambda_m = 1e-4;
    Real lambda_b = 1e-3;
    int pixels_per_iter = 30000;
    int frames_per_iter = 5;
    int checkpoint_every = 0;
    Real jitter_radius = 0.01;
    Real metallic_init = kMetallicInit;
    bool brdf_factor4 = false;
    HashGridConfig hash;
    std::string augmentation;
    int threads = 0;

    json to_json() const {
        return {{"data", data},
                {"out", out},
                {"seed", seed},
                {"epochs", epochs},
                {"lr", lr},
                {"lambda_m", lambda_m},
                {"lambda_b", lambda_b},
                {"pixels_per_iter", pixels_per_iter},
                {"frames_per_iter", frames_per_iter},
                {"checkpoint_every", checkpoint_every},
                {"jitter_radius", jitter_radius},
                {"metallic_init", metallic_init},
                {"brdf_factor4", brdf_factor4},
                {"hash_grid", hash},
                {"augmentation", augmentation},
                {"threads", threads}};
    }

    void merge_json(const json& j) {
        data = j.value("data", data);
        out = j.value("out", out);
        seed = j.value("seed", seed);
        epochs = j.value("epochs", epochs);
        lr = j.value("lr", lr);
        lambda_m = j.value("lambda_m", lambda_m);
        lambda_b = j.value("lambda_b", lambda_b);
        pixels_per_iter = j.value("pixels_per_iter", pixels_per_iter);
        frames_per_iter = j.value("frames_per_iter", frames_per_iter);
        checkpoint_every = j.value("checkpoint_every", checkpoint_every);
        jitter_radius = j.value("jitter_radius", jitter_radius);
        metallic_init = j.value("metallic_init", metallic_init);
        brdf_factor4 = j.value("brdf_factor4", brdf_factor4);
        if (j.contains("hash_grid")) hash = j.at("hash_grid").get<HashGridConfig>();
        augmentation = j.value("augmentation", augmentation);
        threads = j.value("threads", threads);
    }

    void validate() const {
        if (epochs < 0) throw Error(ErrorKind::Config, "--epochs must be >= 0");
        if (!(lr > 0)) throw Error(ErrorKind::Config, "--lr must be positive");
        if (lambda_m < 0 || lambda_b < 0) throw Error(ErrorKind::Config, "loss weights must be >= 0");
        if (pixels_per_iter < 1 || frames_per_iter < 1)
            throw Error(ErrorKind::Config, "--pixels and --frames-per-iter must be positive");
        if (threads < 0) throw Error(ErrorKind::Config, "--threads must be >= 0");
        if (!(metallic_init > 0 && metallic_init < 1))
            throw Error(ErrorKind::Config, "--metallic-init must lie strictly inside (0, 1)");
        hash.validate();
    }
};

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Load, "cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, path + " at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

void require_path(const std::string& p, const char* what) {
    if (p.empty()) throw Error(ErrorKind::Config, std::string("missing ") + what);
    if (!fs::exists(p)) throw Error(ErrorKind::Load, std::string(what) + " not found: " + p);
}

void write_run_meta(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed) {
    fs::create_directories(dir);
    json meta = {{"command", command}, {"config", config}, {"seed", seed}, {"version", kVersion}};
    std::ofstream(dir / "run_meta.json") << meta.dump(2) << '\n';
}

Dataset load_with_report(const std::string& path) {
    SplitSummary split;
    Dataset ds = load_dataset(path, &split);
    if (!split.warning.empty()) std::cerr << "warning: " << split.warning << '\n';
    std::cerr << "loaded " << ds.frames.size() << " frames (" << split.train << " train, " << split.test
              << " test)\n";
    return ds;
}

std::string format_loss(const LossBreakdown& l) {
    std::ostringstream os;
    os << std::setprecision(6) << "total=" << l.total << " l1=" << l.l1 << " metallic=" << l.metallic_penalty
       << " smoothness=" << l.albedo_smoothness;
    return os.str();
}

// ---------------------------------------------------------------- train

int cmd_train(const RunConfig& cfg) {
    cfg.validate();
    require_path(cfg.data, "dataset (--data)");
    const Dataset ds = load_with_report(cfg.data);
    const Intrinsics& K = ds.intrinsics();

    ModelConfig mcfg;
    mcfg.hash = cfg.hash;
    mcfg.brdf.factor4 = cfg.brdf_factor4;
    mcfg.forward_axis = ds.manifest.forward_axis;

    TrainConfig tcfg;
    tcfg.epochs = cfg.epochs;
    tcfg.adam.lr = cfg.lr;
    tcfg.weights = {cfg.lambda_m, cfg.lambda_b};
    tcfg.pixels_per_iter = cfg.pixels_per_iter;
    tcfg.frames_per_iter = cfg.frames_per_iter;
    tcfg.jitter_radius = cfg.jitter_radius;
    tcfg.metallic_init = cfg.metallic_init;
    tcfg.seed = cfg.seed;
    tcfg.checkpoint_every = cfg.checkpoint_every;
    tcfg.threads = cfg.threads;

    const fs::path out(cfg.out);
    fs::create_directories(out);
    write_run_meta(out, "train", cfg.to_json(), cfg.seed);
    const json meta = {{"data", fs::absolute(cfg.data).string()}, {"seed", cfg.seed}, {"version", kVersion}};

    Model model = initial_model(ds.frames, K, mcfg, tcfg);
    std::ofstream log(out / "train_log.csv");
    log << "epoch,iter,l1,metallic,smoothness,total,L0,n_exp,q_exp,gamma\n";
    log << std::setprecision(17);
    LossBreakdown last;
    TrainCallbacks cb;
    cb.on_iteration = [&](const TrainLogRow& r) {
        log << r.epoch << ',' << r.iter << ',' << r.loss.l1 << ',' << r.loss.metallic_penalty << ','
            << r.loss.albedo_smoothness << ',' << r.loss.total << ',' << r.light.L0 << ',' << r.light.n_exp << ','
            << r.light.q_exp << ',' << r.light.gamma << '\n';
        if (r.iter == 0) std::cerr << "initial loss: " << format_loss(r.loss) << '\n';
        last = r.loss;
    };
    cb.on_checkpoint = [&](int epoch, const Model& m) {
        save_checkpoint(out / ("checkpoint_epoch_" + frame_stem(epoch) + ".bin"), m, meta);
        std::cerr << "epoch " << epoch << ": " << format_loss(last) << '\n';
    };
    train(model, ds.frames, K, tcfg, cb);
    save_checkpoint(out / "checkpoint.bin", model, meta);
    const SpotlightParams light = model.light();
    std::cout << "final loss: " << format_loss(last) << '\n'
              << "light: L0=" << light.L0 << " n_exp=" << light.n_exp << " q_exp=" << light.q_exp
              << " gamma=" << light.gamma << '\n'
              << "checkpoint: " << (out / "checkpoint.bin").string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string checkpoint;
    std::string data;
    std::vector<int> frames;
    std::string pose;
    std::string depth;
    bool splat = false;
    std::string out = "renders";
};

std::size_t count_valid(const DepthMap& d) {
    std::size_t n = 0;
    for (Real z : d.data()) n += depth_valid(z);
    return n;
}

int cmd_render(const RenderArgs& a) {
    require_path(a.checkpoint, "checkpoint");
    require_path(a.data, "dataset (--data)");
    const Model model = load_checkpoint(a.checkpoint).model;
    const Dataset ds = load_with_report(a.data);
    const Intrinsics& K = ds.intrinsics();
    const fs::path out(a.out);
    fs::create_directories(out);
    write_run_meta(out, "render",
                   {{"checkpoint", a.checkpoint}, {"data", a.data}, {"frames", a.frames}, {"pose", a.pose},
                    {"depth", a.depth}, {"splat", a.splat}},
                   0);

    if (!a.pose.empty()) {
        const Pose pose = read_pose_file(a.pose);
        DepthMap depth;
        if (!a.depth.empty()) {
            depth = dequantize_depth(read_png_gray16(a.depth), ds.manifest.depth_scale);
        } else if (a.splat) {
            depth = splat_depth(pose, ds.frames, K);
        } else {
            throw Error(ErrorKind::Config, "a novel pose needs --depth or --splat");
        }
        const std::size_t valid = count_valid(depth);
        if (Real(valid) < 0.5 * Real(depth.pixel_count()))
            std::cerr << "warning: only " << valid << " of " << depth.pixel_count() << " pixels have depth\n";
        const fs::path file = out / (fs::path(a.pose).stem().string() + ".png");
        write_png_rgb8(file, render_image(pose, depth, K, model).to_8bit());
        std::cout << file.string() << '\n';
        return kOk;
    }

    for (const auto& f : ds.frames) {
        if (!a.frames.empty() && std::find(a.frames.begin(), a.frames.end(), f.frame_id) == a.frames.end()) continue;
        const DepthMap depth = a.splat ? splat_depth(f.pose, ds.frames, K) : f.depth;
        const fs::path file = out / ("render_" + frame_stem(f.frame_id) + ".png");
        write_png_rgb8(file, render_image(f.pose, depth, K, model).to_8bit());
        std::cout << file.string() << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& out_dir) {
    require_path(checkpoint, "checkpoint");
    require_path(data, "dataset (--data)");
    const Model model = load_checkpoint(checkpoint).model;
    const Dataset ds = load_with_report(data);
    const EvalReport report = evaluate_test_split(model, ds);
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_run_meta(out, "eval", {{"checkpoint", checkpoint}, {"data", data}}, 0);
    report.write(out / "eval.csv", out / "eval.json");
    std::cout << std::setprecision(6) << "frames=" << report.frames.size() << " psnr=" << report.mean_psnr()
              << " ssim=" << report.mean_ssim() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- augment

int cmd_augment(const std::string& checkpoint, const std::string& data, const std::string& spec_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed) {
    require_path(checkpoint, "checkpoint");
    require_path(data, "dataset (--data)");
    const Model model = load_checkpoint(checkpoint).model;
    if (model.store().step == 0) std::cerr << "warning: checkpoint has not been trained\n";
    const Dataset ds = load_with_report(data);
    AugmentationSpec spec;
    if (!spec_path.empty()) {
        require_path(spec_path, "augmentation spec");
        spec = AugmentationSpec::from_json(load_json_file(spec_path));
    }
    if (seed) spec.seed = *seed;
    spec.validate();
    const ExportReport report = export_augmented(model, ds, spec, out_dir);
    write_run_meta(out_dir, "augment", {{"checkpoint", checkpoint}, {"data", data}, {"spec", spec.to_json()}},
                   spec.seed);
    std::cout << "requested=" << report.requested << " written=" << report.written
              << " skipped_low_coverage=" << report.skipped_coverage
              << " skipped_excluded_pose=" << report.skipped_excluded << '\n';
    return kOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& checkpoint, std::string data, std::size_t samples, std::uint64_t seed,
                  const std::string& out_dir) {
    require_path(checkpoint, "checkpoint");
    LoadedCheckpoint ck = load_checkpoint(checkpoint);
    if (samples == 0) {
        std::cout << "no samples requested; empty report\n";
        return kOk;
    }
    if (data.empty()) data = ck.meta.value("data", std::string());
    require_path(data, "dataset (--data)");
    const Dataset ds = load_with_report(data);
    const auto t0 = std::chrono::steady_clock::now();
    const GradCheckReport report = grad_check(ck.model, ds.frames, ds.intrinsics(), LossWeights{}, samples, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json j = json::array();
    std::cout << std::left << std::setw(8) << "group" << std::setw(16) << "max_rel_error" << std::setw(8)
              << "probes" << "skipped\n";
    for (const auto& g : report.groups) {
        std::cout << std::setw(8) << g.name << std::setw(16) << g.max_rel_error << std::setw(8) << g.probes
                  << g.skipped << '\n';
        j.push_back({{"group", g.name}, {"max_rel_error", g.max_rel_error}, {"probes", g.probes}, {"skipped", g.skipped}});
    }
    std::cout << "samples=" << samples << " seconds=" << secs << (report.passed() ? " PASS" : " FAIL") << '\n';
    if (!out_dir.empty()) {
        write_run_meta(out_dir, "gradcheck", {{"checkpoint", checkpoint}, {"data", data}, {"samples", samples}}, seed);
        std::ofstream(fs::path(out_dir) / "gradcheck.json") << j.dump(2) << '\n';
    }
    return report.passed() ? kOk : kRuntime;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string kind = "sphere";
    int views = 20;
    std::string out = "scene";
    int width = 80, height = 80;
    Real fx = 160, fy = 160;
    std::optional<Real> cx, cy;
    std::vector<Real> albedo{0.7, 0.3, 0.2};
    Real roughness = 0.5, metallic = 0.0;
    Real L0 = 5, n_exp = 2, q_exp = 2, gamma = 2.2;
    Real depth_scale = 1e-4;
    Real plane_distance = 0.1;
    bool factor4 = false;
};

int cmd_synth(const SynthArgs& a) {
    AnalyticSceneSpec spec;
    spec.kind = analytic_kind_from_string(a.kind);
    spec.n_views = a.views;
    spec.K = {a.fx, a.fy, a.cx.value_or(a.width / 2.0), a.cy.value_or(a.height / 2.0), a.width, a.height};
    if (a.albedo.size() != 3) throw Error(ErrorKind::Config, "--albedo takes three values");
    spec.material = {Vec3(a.albedo[0], a.albedo[1], a.albedo[2]), a.roughness, a.metallic};
    spec.light = {a.L0, a.n_exp, a.q_exp, a.gamma};
    if (!spec.light.valid()) throw Error(ErrorKind::Config, "light parameters must be positive");
    spec.depth_scale = a.depth_scale;
    spec.plane_distance = a.plane_distance;
    spec.brdf.factor4 = a.factor4;
    const Dataset ds = generate_analytic_scene(spec, a.out);
    write_run_meta(a.out, "synth", spec.to_json(), 0);
    std::cout << "wrote " << ds.frames.size() << " views to " << a.out << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Material and spotlight estimation from posed RGB-D frames"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    RunConfig cfg;
    auto* train_cmd = app.add_subcommand("train", "fit material and light parameters to a dataset");
    train_cmd->add_option("--config", config_path, "JSON run configuration (flags override it)");
    auto* o_data = train_cmd->add_option("--data", cfg.data, "dataset directory or manifest.json");
    auto* o_out = train_cmd->add_option("--out", cfg.out, "output directory");
    auto* o_seed = train_cmd->add_option("--seed", cfg.seed, "random seed");
    auto* o_epochs = train_cmd->add_option("--epochs", cfg.epochs, "training epochs");
    auto* o_lr = train_cmd->add_option("--lr", cfg.lr, "Adam learning rate");
    auto* o_lm = train_cmd->add_option("--lambda-m", cfg.lambda_m, "metallic penalty weight");
    auto* o_lb = train_cmd->add_option("--lambda-b", cfg.lambda_b, "albedo smoothness weight");
    auto* o_pix = train_cmd->add_option("--pixels", cfg.pixels_per_iter, "pixels per iteration");
    auto* o_fpi = train_cmd->add_option("--frames-per-iter", cfg.frames_per_iter, "frames per iteration");
    auto* o_ck = train_cmd->add_option("--checkpoint-every", cfg.checkpoint_every, "epochs between checkpoints");
    auto* o_jit = train_cmd->add_option("--jitter-radius", cfg.jitter_radius, "albedo smoothness jitter radius");
    auto* o_mi = train_cmd->add_option("--metallic-init", cfg.metallic_init, "starting metallic output");
    auto* o_f4 = train_cmd->add_flag("--factor4", cfg.brdf_factor4, "use the 4(n.wi)(n.wo) specular denominator");
    auto* o_hl = train_cmd->add_option("--hash-levels", cfg.hash.levels);
    auto* o_hf = train_cmd->add_option("--hash-features", cfg.hash.features);
    auto* o_ht = train_cmd->add_option("--hash-table-size", cfg.hash.table_size, "entries per level (power of two)");
    auto* o_hb = train_cmd->add_option("--hash-base-res", cfg.hash.base_resolution);
    auto* o_hm = train_cmd->add_option("--hash-max-res", cfg.hash.finest_resolution);
    auto* o_thr = train_cmd->add_option("--threads", cfg.threads, "worker threads (default ENDOPBR_THREADS or all)");

    RenderArgs rargs;
    auto* render_cmd = app.add_subcommand("render", "render frames or a novel pose");
    render_cmd->add_option("--checkpoint", rargs.checkpoint)->required();
    render_cmd->add_option("--data", rargs.data, "dataset providing intrinsics, poses and depth")->required();
    render_cmd->add_option("--frames", rargs.frames, "frame ids to render (default all)");
    render_cmd->add_option("--pose", rargs.pose, "4x4 camera-to-world pose file for a novel view");
    render_cmd->add_option("--depth", rargs.depth, "16-bit depth PNG for the novel view");
    render_cmd->add_flag("--splat", rargs.splat, "synthesize depth by splatting the dataset frames");
    render_cmd->add_option("--out", rargs.out);
    int render_threads = 0;
    render_cmd->add_option("--threads", render_threads);

    std::string eval_ckpt, eval_data, eval_out = "eval";
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM on the held-out split");
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--out", eval_out);

    std::string aug_ckpt, aug_data, aug_spec, aug_out = "augmented";
    std::uint64_t aug_seed = 0;
    auto* aug_cmd = app.add_subcommand("augment", "export a perturbed synthetic dataset");
    aug_cmd->add_option("--checkpoint", aug_ckpt)->required();
    aug_cmd->add_option("--data", aug_data)->required();
    aug_cmd->add_option("--spec", aug_spec, "augmentation spec JSON");
    aug_cmd->add_option("--out", aug_out);
    auto* o_aug_seed = aug_cmd->add_option("--seed", aug_seed);

    std::string gc_ckpt, gc_data, gc_out;
    std::size_t gc_samples = 100;
    std::uint64_t gc_seed = 0;
    auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    gc_cmd->add_option("--checkpoint", gc_ckpt)->required();
    gc_cmd->add_option("--data", gc_data, "dataset (defaults to the one recorded in the checkpoint)");
    gc_cmd->add_option("--samples", gc_samples, "single-pixel losses to probe");
    gc_cmd->add_option("--seed", gc_seed);
    gc_cmd->add_option("--out", gc_out, "directory for gradcheck.json and run_meta.json");

    SynthArgs sargs;
    auto* synth_cmd = app.add_subcommand("synth", "generate an analytic sphere or plane dataset");
    synth_cmd->add_option("--kind", sargs.kind)->check(CLI::IsMember({"sphere", "plane"}));
    synth_cmd->add_option("--views", sargs.views);
    synth_cmd->add_option("--out", sargs.out);
    synth_cmd->add_option("--width", sargs.width);
    synth_cmd->add_option("--height", sargs.height);
    synth_cmd->add_option("--fx", sargs.fx);
    synth_cmd->add_option("--fy", sargs.fy);
    synth_cmd->add_option("--cx", sargs.cx);
    synth_cmd->add_option("--cy", sargs.cy);
    synth_cmd->add_option("--albedo", sargs.albedo)->expected(3);
    synth_cmd->add_option("--roughness", sargs.roughness);
    synth_cmd->add_option("--metallic", sargs.metallic);
    synth_cmd->add_option("--L0", sargs.L0);
    synth_cmd->add_option("--n-exp", sargs.n_exp);
    synth_cmd->add_option("--q-exp", sargs.q_exp);
    synth_cmd->add_option("--gamma", sargs.gamma);
    synth_cmd->add_option("--depth-scale", sargs.depth_scale);
    synth_cmd->add_option("--plane-distance", sargs.plane_distance);
    synth_cmd->add_flag("--factor4", sargs.factor4);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*train_cmd) {
            // flags win over the config file: re-apply every flag that was given
            RunConfig merged;
            if (!config_path.empty()) merged.merge_json(load_json_file(config_path));
            auto take = [](CLI::Option* o, auto& dst, const auto& src) {
                if (o->count() > 0) dst = src;
            };
            take(o_data, merged.data, cfg.data);
            take(o_out, merged.out, cfg.out);
            take(o_seed, merged.seed, cfg.seed);
            take(o_epochs, merged.epochs, cfg.epochs);
            take(o_lr, merged.lr, cfg.lr);
            take(o_lm, merged.lambda_m, cfg.lambda_m);
            take(o_lb, merged.lambda_b, cfg.lambda_b);
            take(o_pix, merged.pixels_per_iter, cfg.pixels_per_iter);
            take(o_fpi, merged.frames_per_iter, cfg.frames_per_iter);
            take(o_ck, merged.checkpoint_every, cfg.checkpoint_every);
            take(o_jit, merged.jitter_radius, cfg.jitter_radius);
            take(o_mi, merged.metallic_init, cfg.metallic_init);
            take(o_f4, merged.brdf_factor4, cfg.brdf_factor4);
            take(o_hl, merged.hash.levels, cfg.hash.levels);
            take(o_hf, merged.hash.features, cfg.hash.features);
            take(o_ht, merged.hash.table_size, cfg.hash.table_size);
            take(o_hb, merged.hash.base_resolution, cfg.hash.base_resolution);
            take(o_hm, merged.hash.finest_resolution, cfg.hash.finest_resolution);
            take(o_thr, merged.threads, cfg.threads);
            return cmd_train(merged);
        }
        if (*render_cmd) return cmd_render(rargs);
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_out);
        if (*aug_cmd)
            return cmd_augment(aug_ckpt, aug_data, aug_spec, aug_out,
                               o_aug_seed->count() ? std::optional<std::uint64_t>(aug_seed) : std::nullopt);
        if (*gc_cmd) return cmd_gradcheck(gc_ckpt, gc_data, gc_samples, gc_seed, gc_out);
        if (*synth_cmd) return cmd_synth(sargs);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_validation() ? kValidation : kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
