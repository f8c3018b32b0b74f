// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "test_util.hpp"

namespace endopbr {
namespace {

using testing::TempDir;

// ---------------------------------------------------------------- PNG / files

TEST(Png, Rgb8RoundTrip) {
    TempDir dir("png");
    RgbImage8 img(7, 5, 3);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 7; ++i)
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = std::uint8_t((i * 37 + j * 11 + c * 101) & 255);
    write_png_rgb8(dir.path() / "a.png", img);
    EXPECT_EQ(read_png_rgb8(dir.path() / "a.png"), img);
}

TEST(Png, Gray16RoundTripIncludingExtremes) {
    TempDir dir("png16");
    Gray16Image img(4, 3, 1);
    const std::uint16_t vals[] = {0, 1, 255, 256, 65535, 40000, 12345, 2, 3, 4, 5, 6};
    for (int k = 0; k < 12; ++k) img.at(k % 4, k / 4) = vals[k];
    write_png_gray16(dir.path() / "d.png", img);
    EXPECT_EQ(read_png_gray16(dir.path() / "d.png"), img);
}

TEST(Png, MissingOrCorruptFile) {
    TempDir dir("pngbad");
    EXPECT_THROW(read_png_rgb8(dir.path() / "nope.png"), Error);
    std::ofstream(dir.path() / "junk.png") << "not a png";
    EXPECT_THROW(read_png_rgb8(dir.path() / "junk.png"), Error);
}

TEST(Depth, ScaleRule) {
    Gray16Image raw(2, 1, 1);
    raw.at(0, 0) = 65535;
    raw.at(1, 0) = 0;
    const DepthMap d = dequantize_depth(raw, 2.5e-5);
    EXPECT_EQ(d.at(0, 0), 65535 * 2.5e-5);
    EXPECT_EQ(d.at(1, 0), 0);
    EXPECT_EQ(quantize_depth(d, 2.5e-5), raw);
}

TEST(Pose, FileRoundTripIsExact) {
    TempDir dir("pose");
    std::mt19937_64 g(1);
    for (int k = 0; k < 20; ++k) {
        const Pose p = testing::random_pose(g);
        write_pose_file(dir.path() / "p.txt", p);
        const Pose q = read_pose_file(dir.path() / "p.txt");
        EXPECT_EQ(p.R, q.R);
        EXPECT_EQ(p.t, q.t);
    }
    std::ofstream(dir.path() / "short.txt") << "1 0 0";
    EXPECT_THROW(read_pose_file(dir.path() / "short.txt"), Error);
}

// ---------------------------------------------------------------- split

std::vector<FrameRecord> numbered(int n) {
    std::vector<FrameRecord> f(n);
    for (int k = 0; k < n; ++k) f[k].frame_id = (k * 7) % n;  // shuffled ids
    return f;
}

TEST(Split, EighteenFrames) {
    auto f = numbered(18);
    const SplitSummary s = split_frames(f);
    EXPECT_EQ(s.train, 16u);
    EXPECT_EQ(s.test, 2u);
    EXPECT_TRUE(s.warning.empty());
    for (int k = 0; k < 18; ++k) {
        EXPECT_EQ(f[k].frame_id, k);
        EXPECT_EQ(f[k].split == Split::Test, k == 8 || k == 17);
    }
}

TEST(Split, NineAndFiveFrames) {
    auto nine = numbered(9);
    EXPECT_EQ(split_frames(nine).test, 1u);
    EXPECT_EQ(nine[8].split, Split::Test);
    auto five = numbered(5);
    const SplitSummary s = split_frames(five);
    EXPECT_EQ(s.train, 5u);
    EXPECT_EQ(s.test, 0u);
    EXPECT_FALSE(s.warning.empty());
}

TEST(Split, PartitionProperty) {
    for (int n = 0; n < 60; ++n) {
        auto f = numbered(n);
        auto g = f;
        const SplitSummary s = split_frames(f);
        split_frames(g);
        EXPECT_EQ(s.train + s.test, std::size_t(n));
        EXPECT_EQ(frames_in_split(f, Split::Train).size(), s.train);
        for (int k = 0; k < n; ++k) EXPECT_EQ(f[k].split, g[k].split);
    }
}

// ---------------------------------------------------------------- loading

DatasetManifest tiny_manifest() {
    DatasetManifest m;
    m.intrinsics = {10, 10, 2, 2, 4, 4};
    m.depth_scale = 1e-3;
    return m;
}

FrameRecord tiny_frame(int id) {
    FrameRecord f;
    f.frame_id = id;
    f.image = RgbImage8(4, 4, 3, std::uint8_t(10 * id));
    f.depth = DepthMap(4, 4, 1, 0.5 + 0.001 * id);
    f.pose.t = Vec3(id, 0, 0);
    return f;
}

TEST(LoadDataset, EmptyManifestIsEmptyScene) {
    TempDir dir("empty");
    write_manifest(dir.path(), tiny_manifest());
    try {
        load_dataset(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyScene);
    }
}

TEST(LoadDataset, ErrorsNameTheFrame) {
    TempDir dir("errors");
    write_dataset(dir.path(), tiny_manifest(), {tiny_frame(0), tiny_frame(3)});
    fs::remove(dir.path() / "depth" / "0003.png");
    try {
        load_dataset(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Load);
        EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos);
    }

    FrameRecord skew = tiny_frame(3);
    skew.pose.R(0, 1) = 0.01;
    write_dataset(dir.path(), tiny_manifest(), {tiny_frame(0), skew});
    try {
        load_dataset(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos);
    }

    FrameRecord big = tiny_frame(3);
    big.image = RgbImage8(5, 4, 3);
    write_dataset(dir.path(), tiny_manifest(), {tiny_frame(0), big});
    EXPECT_THROW(load_dataset(dir.path()), Error);
}

TEST(LoadDataset, MalformedManifestIsParseError) {
    TempDir dir("malformed");
    std::ofstream(dir.path() / "manifest.json") << "{\"intrinsics\": [";
    try {
        load_dataset(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_TRUE(e.is_validation());
    }
}

TEST(LoadDataset, ExportLoadRoundTrip) {
    TempDir dir("roundtrip");
    const AnalyticSceneSpec spec = testing::small_sphere(11);
    const Dataset a = generate_analytic_scene(spec, dir.path() / "a");
    write_dataset(dir.path() / "b", a.manifest, a.frames);
    const Dataset b = load_dataset(dir.path() / "b");
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t k = 0; k < a.frames.size(); ++k) {
        EXPECT_EQ(a.frames[k].frame_id, b.frames[k].frame_id);
        EXPECT_EQ(a.frames[k].split, b.frames[k].split);
        EXPECT_EQ(a.frames[k].image, b.frames[k].image);
        EXPECT_LE((a.frames[k].pose.R - b.frames[k].pose.R).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE((a.frames[k].pose.t - b.frames[k].pose.t).cwiseAbs().maxCoeff(), 1e-6);
        for (std::size_t i = 0; i < a.frames[k].depth.data().size(); ++i)
            EXPECT_LE(std::abs(a.frames[k].depth.data()[i] - b.frames[k].depth.data()[i]), spec.depth_scale);
    }
    EXPECT_EQ(b.manifest.extra.at("truth"), a.manifest.extra.at("truth"));
    EXPECT_EQ(b.manifest.intrinsics.fx, spec.K.fx);
}

TEST(Manifest, ExtraKeysAndBoundsSurvive) {
    DatasetManifest m = tiny_manifest();
    m.extra["note"] = "kept";
    m.scene_bounds = SceneBounds{Vec3(-1, -2, -3), Vec3(1, 2, 3)};
    m.forward_axis = ForwardAxis::MinusZ;
    const DatasetManifest r = DatasetManifest::from_json(m.to_json());
    EXPECT_EQ(r.extra.at("note"), "kept");
    ASSERT_TRUE(r.scene_bounds);
    EXPECT_EQ(r.scene_bounds->max_corner, Vec3(1, 2, 3));
    EXPECT_EQ(r.forward_axis, ForwardAxis::MinusZ);
}

// ---------------------------------------------------------------- analytic scenes

TEST(AnalyticScene, PlaneDepthIsConstant) {
    AnalyticSceneSpec spec = testing::small_sphere(3);
    spec.kind = AnalyticKind::Plane;
    const DepthMap d = analytic_depth(spec, Pose{});
    for (Real z : d.data()) EXPECT_NEAR(z, 0.1, 1e-12);
}

TEST(AnalyticScene, GrayPlaneRendersGray) {
    TempDir dir("plane");
    AnalyticSceneSpec spec = testing::small_sphere(3);
    spec.kind = AnalyticKind::Plane;
    spec.material = {Vec3::Constant(0.5), 0.5, 0.0};
    spec.light.L0 = 0.01;
    const Dataset ds = generate_analytic_scene(spec, dir.path());
    std::size_t lit = 0;
    for (const auto& f : ds.frames)
        for (int j = 0; j < spec.K.height; ++j)
            for (int i = 0; i < spec.K.width; ++i) {
                EXPECT_EQ(f.image.at(i, j, 0), f.image.at(i, j, 1));
                EXPECT_EQ(f.image.at(i, j, 0), f.image.at(i, j, 2));
                lit += f.image.at(i, j, 0) > 0;
            }
    EXPECT_GT(lit, 0u);
}

TEST(AnalyticScene, SphereDepthMinimalAtCenter) {
    AnalyticSceneSpec spec = testing::small_sphere(1, 32);
    const Pose p = look_at(Vec3(0, 0, -5), Vec3::Zero());
    const DepthMap d = analytic_depth(spec, p);
    EXPECT_NEAR(d.at(16, 16), 4.0, 1e-9);
    for (Real z : d.data())
        if (z > 0) {
            EXPECT_GE(z, d.at(16, 16));
        }
    EXPECT_EQ(d.at(0, 0), 0);  // corner ray misses the sphere
}

TEST(AnalyticScene, ViewsAreDistinctRotations) {
    const AnalyticSceneSpec spec;
    for (int k = 0; k < spec.n_views; ++k) {
        const Pose p = analytic_view_pose(spec, k);
        EXPECT_TRUE(p.is_rotation(1e-9));
        EXPECT_NEAR(p.t.norm(), spec.orbit_distance, 1e-9);
        if (k > 0) {
            EXPECT_FALSE(poses_equal(p, analytic_view_pose(spec, k - 1)));
        }
    }
}

// ---------------------------------------------------------------- checkpoints

Model checkpoint_model() {
    const std::vector<Vec3> c{Vec3::Constant(-1), Vec3::Constant(2)};
    Model m = initialize_model(testing::small_model_config(), fit_scene_bounds(c), 5);
    m.set_light({3.5, 1.7, 2.1, 1.9});
    m.store().step = 42;
    return m;
}

TEST(Checkpoint, RoundTripIsBitExact) {
    TempDir dir("ckpt");
    const Model m = checkpoint_model();
    save_checkpoint(dir.path() / "m.bin", m, {{"data", "somewhere"}});
    const LoadedCheckpoint r = load_checkpoint(dir.path() / "m.bin");
    EXPECT_EQ(r.meta.at("data"), "somewhere");
    EXPECT_EQ(r.model.config(), m.config());
    EXPECT_EQ(r.model.bounds().min_corner, m.bounds().min_corner);
    EXPECT_EQ(r.model.store().step, 42u);
    for (std::size_t g = 0; g < m.store().groups().size(); ++g)
        EXPECT_EQ(r.model.store().group(g).value, m.store().group(g).value);
}

TEST(Checkpoint, LayoutIsLittleEndianWithJsonHeader) {
    TempDir dir("ckptlayout");
    save_checkpoint(dir.path() / "m.bin", checkpoint_model());
    std::ifstream is(dir.path() / "m.bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
    ASSERT_GT(bytes.size(), 16u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "EPBRCKPT");
    std::uint64_t len = 0;
    for (int k = 7; k >= 0; --k) len = (len << 8) | bytes[8 + k];
    const json header = json::parse(std::string(bytes.begin() + 16, bytes.begin() + 16 + len));
    EXPECT_EQ(header.at("format"), "endopbr-checkpoint");
    // last group (log gamma) is the final 8 bytes
    std::uint64_t raw = 0;
    for (int k = 7; k >= 0; --k) raw = (raw << 8) | bytes[bytes.size() - 8 + k];
    Real v;
    std::memcpy(&v, &raw, 8);
    EXPECT_EQ(v, std::log(1.9));
    const auto& last = header.at("groups").back();
    EXPECT_EQ(16 + len + last.at("offset").get<std::uint64_t>(), bytes.size() - 8);
}

TEST(Checkpoint, CorruptHeaderReportsOffset) {
    TempDir dir("ckptbad");
    const fs::path p = dir.path() / "m.bin";
    save_checkpoint(p, checkpoint_model());
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(16);
        f.put('#');
    }
    try {
        load_checkpoint(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("offset 16"), std::string::npos) << e.what();
    }
    std::ofstream(p, std::ios::binary) << "NOTACKPT";
    EXPECT_THROW(load_checkpoint(p), Error);
    EXPECT_THROW(load_checkpoint(dir.path() / "missing.bin"), Error);
}

TEST(Checkpoint, TruncatedDataIsParseError) {
    TempDir dir("ckpttrunc");
    const fs::path p = dir.path() / "m.bin";
    save_checkpoint(p, checkpoint_model());
    fs::resize_file(p, fs::file_size(p) - 4);
    try {
        load_checkpoint(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

// ---------------------------------------------------------------- augmentation

class AugmentTest : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir("augment");
        ds_ = new Dataset(testing::small_scene(dir_->path() / "base", 10));
        model_ = new Model(initial_model(ds_->frames, ds_->intrinsics(), testing::small_model_config(),
                                         testing::fast_train_config(0)));
        train(*model_, ds_->frames, ds_->intrinsics(), testing::fast_train_config(3));
    }
    static void TearDownTestSuite() {
        delete model_;
        delete ds_;
        delete dir_;
    }
    static AugmentationSpec identity_spec() {
        AugmentationSpec s;
        s.rotation_deg_std = 0;
        s.translation_std = 0;
        s.samples_per_frame = 1;
        s.albedo_scale_min = s.albedo_scale_max = 1;
        s.L0_scale_min = s.L0_scale_max = 1;
        s.exclude_training_poses = false;
        return s;
    }
    static TempDir* dir_;
    static Dataset* ds_;
    static Model* model_;
};
TempDir* AugmentTest::dir_ = nullptr;
Dataset* AugmentTest::ds_ = nullptr;
Model* AugmentTest::model_ = nullptr;

TEST_F(AugmentTest, IdentitySpecReproducesPlainRenders) {
    const fs::path out = dir_->path() / "identity";
    const ExportReport r = export_augmented(*model_, *ds_, identity_spec(), out);
    EXPECT_EQ(r.written, ds_->frames.size());
    const Dataset exp = load_dataset(out);
    for (std::size_t k = 0; k < ds_->frames.size(); ++k) {
        const auto& f = ds_->frames[k];
        EXPECT_EQ(exp.frames[k].image, render_image(f.pose, f.depth, ds_->intrinsics(), *model_).to_8bit());
        EXPECT_TRUE(poses_equal(exp.frames[k].pose, f.pose, 1e-12));
    }
}

TEST_F(AugmentTest, HalvingL0HalvesRadiance) {
    std::vector<RgbImageF> base, half;
    export_augmented(*model_, *ds_, identity_spec(), dir_->path() / "h1",
                     [&](const AugmentedSample& s) { base.push_back(s.render.hdr); });
    AugmentationSpec spec = identity_spec();
    spec.L0_scale_min = spec.L0_scale_max = 0.5;
    export_augmented(*model_, *ds_, spec, dir_->path() / "h2",
                     [&](const AugmentedSample& s) { half.push_back(s.render.hdr); });
    ASSERT_EQ(base.size(), half.size());
    Real worst = 0;
    for (std::size_t k = 0; k < base.size(); ++k)
        for (std::size_t i = 0; i < base[k].data().size(); ++i)
            worst = std::max(worst, std::abs(half[k].data()[i] - 0.5 * base[k].data()[i]));
    EXPECT_LT(worst, 1e-9);
}

TEST_F(AugmentTest, ExclusionDropsTrainingPoses) {
    AugmentationSpec spec = identity_spec();
    spec.exclude_training_poses = true;
    spec.samples_per_frame = 2;
    const ExportReport r = export_augmented(*model_, *ds_, spec, dir_->path() / "excl");
    const std::size_t train = frames_in_split(ds_->frames, Split::Train).size();
    EXPECT_EQ(r.requested, 2 * ds_->frames.size());
    EXPECT_EQ(r.skipped_excluded, 2 * train);
    EXPECT_EQ(r.written, r.requested - r.skipped_excluded - r.skipped_coverage);
}

TEST_F(AugmentTest, JitteredExportCountsAndNeverRepeatsTrainingPoses) {
    AugmentationSpec spec;
    spec.samples_per_frame = 3;
    spec.seed = 4;
    const fs::path out = dir_->path() / "jitter";
    const ExportReport r = export_augmented(*model_, *ds_, spec, out);
    EXPECT_EQ(r.written + r.skipped_coverage + r.skipped_excluded, r.requested);
    const Dataset exp = load_dataset(out);
    EXPECT_EQ(exp.frames.size(), r.written);
    for (const auto& e : exp.frames)
        for (const auto* t : frames_in_split(ds_->frames, Split::Train)) EXPECT_FALSE(poses_equal(e.pose, t->pose));
    EXPECT_EQ(exp.manifest.extra.at("augmentation").at("samples").size(), r.written);
}

TEST_F(AugmentTest, LowCoverageSamplesAreSkipped) {
    AugmentationSpec spec = identity_spec();
    spec.translation_std = 50;  // cameras thrown far away see almost nothing
    spec.samples_per_frame = 2;
    const ExportReport r = export_augmented(*model_, *ds_, spec, dir_->path() / "far");
    EXPECT_GT(r.skipped_coverage, 0u);
    EXPECT_EQ(r.written + r.skipped_coverage, r.requested);
}

TEST(AugmentationSpec, JsonRoundTripAndValidation) {
    AugmentationSpec s;
    s.gamma = 1.8;
    s.samples_per_frame = 7;
    const AugmentationSpec r = AugmentationSpec::from_json(s.to_json());
    EXPECT_EQ(r.samples_per_frame, 7);
    ASSERT_TRUE(r.gamma);
    EXPECT_EQ(*r.gamma, 1.8);
    EXPECT_FALSE(r.n_exp);
    s.albedo_scale_min = 2;
    EXPECT_THROW(s.validate(), Error);
    EXPECT_EQ(planned_sample_count(765, AugmentationSpec{}), 18360u);
}

}  // namespace
}  // namespace endopbr
