#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "glass3d/errors.hpp"
#include "glass3d/pipeline.hpp"
#include "oracles.hpp"

using namespace glass3d;
namespace fs = std::filesystem;

namespace {

const CameraIntrinsics kSmall{40, 40, 20, 15, 40, 30};

class PipelineTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("glass3d_pipe_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GLASS3D_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<Vec3> rectangle_at(double z, double half) {
    return {{-half, -half, z}, {half, -half, z}, {half, half, z}, {-half, half, z}};
}

io::FrameRecord frame_with_labels(const fs::path& dir, const std::string& id, const InstanceMaskSet& labels) {
    io::FrameRecord f;
    f.id = id;
    f.mask = dir / "masks" / (id + ".png");
    io::write_mask_png(*f.mask, labels);
    return f;
}

InstanceMaskSet halves() {
    InstanceMaskSet m(kSmall.height, kSmall.width, 0);
    for (int r = 5; r < 25; ++r)
        for (int c = 4; c < 36; ++c) m(r, c) = c < 20 ? 1 : 2;
    return m;
}

pipeline::SynthOptions small_synth(int count) {
    pipeline::SynthOptions o;
    o.seed = 17;
    o.count = count;
    return o;
}

}  // namespace

TEST_F(PipelineTest, AnnotateReproducesSynthBitExactly) {
    pipeline::write_synthetic_dataset(dir_ / "gt", small_synth(12));
    const auto summary = pipeline::annotate(dir_ / "gt" / "manifest.json", dir_ / "out");
    EXPECT_TRUE(summary.diagnostics.empty());
    EXPECT_EQ(summary.instances, summary.instances_ok);
    EXPECT_EQ(summary.frames, 12);
    for (int i = 0; i < 12; ++i) {
        const std::string id = pipeline::frame_id(i);
        for (const char* sub : {"depth/", "centerness/"}) {
            const std::string rel = std::string(sub) + id + ".pfm";
            EXPECT_EQ(io::read_file_bytes(dir_ / "out" / rel), io::read_file_bytes(dir_ / "gt" / rel)) << rel;
        }
        EXPECT_EQ(io::read_file_bytes(dir_ / "out" / "masks" / (id + ".png")),
                  io::read_file_bytes(dir_ / "gt" / "masks" / (id + ".png")));
    }
    const io::SceneManifest out = io::load_manifest(dir_ / "out" / "manifest.json");
    for (const auto& f : out.frames)
        for (const auto& inst : f.instances) EXPECT_TRUE(inst.plane.has_value());
}

TEST_F(PipelineTest, CollinearBoxIsPartialFailure) {
    io::SceneManifest m;
    m.intrinsics = kSmall;
    io::FrameRecord f = frame_with_labels(dir_, "f0", halves());
    f.instances.push_back({1, rectangle_at(2.0, 1.0), std::nullopt, std::nullopt});
    f.instances.push_back({2, {{0, 0, 1}, {1, 0, 1}}, std::nullopt, std::nullopt});
    m.frames.push_back(f);
    io::save_manifest(m, dir_ / "manifest.json");

    const auto summary = pipeline::annotate(dir_ / "manifest.json", dir_ / "out");
    ASSERT_EQ(summary.diagnostics.size(), 1u);
    EXPECT_EQ(summary.diagnostics[0].instance_id, 2);
    EXPECT_EQ(summary.diagnostics[0].kind, "DegenerateGeometry");
    EXPECT_EQ(summary.instances_ok, 1);
    const DepthMap depth = io::read_pfm(dir_ / "out" / "depth" / "f0.pfm");
    EXPECT_EQ(depth(10, 10), 2.0);
    EXPECT_EQ(depth(10, 30), 0.0);
    const std::string log = io::read_file_bytes(dir_ / "out" / "annotate_log.json");
    EXPECT_NE(log.find("DegenerateGeometry"), std::string::npos);

    EXPECT_EQ(run_cli("annotate --input " + (dir_ / "manifest.json").string() + " --output " +
                      (dir_ / "cli").string()),
              2);
}

TEST_F(PipelineTest, IdentityPoseMatchesCameraFrameProcessing) {
    const std::vector<Vec3> box{{-1, -1, 2.5}, {1, -1, 3.0}, {1, 1, 3.0}, {-1, 1, 2.5}};
    InstanceMaskSet labels(kSmall.height, kSmall.width, 0);
    for (int r = 3; r < 27; ++r)
        for (int c = 2; c < 38; ++c) labels(r, c) = 1;
    io::SceneManifest m;
    m.intrinsics = kSmall;
    io::FrameRecord f = frame_with_labels(dir_, "id", labels);
    f.instances.push_back({1, box, std::nullopt, std::nullopt});
    m.frames.push_back(f);
    io::save_manifest(m, dir_ / "manifest.json");
    ASSERT_TRUE(pipeline::annotate(dir_ / "manifest.json", dir_ / "out").diagnostics.empty());

    const Plane direct = fit_plane_lsq(box);
    const DepthMap expected = render_depth(labels, std::vector<Plane>{direct}, kSmall);
    EXPECT_EQ(io::read_file_bytes(dir_ / "out" / "depth" / "id.pfm"), io::encode_pfm(expected));
    const io::SceneManifest out = io::load_manifest(dir_ / "out" / "manifest.json");
    EXPECT_EQ(*out.frames[0].instances[0].plane, direct);
}

TEST_F(PipelineTest, OverlappingInstanceMasksAreDiagnosed) {
    InstanceMaskSet a(kSmall.height, kSmall.width, 0), b(kSmall.height, kSmall.width, 0);
    for (int r = 5; r < 20; ++r)
        for (int c = 5; c < 20; ++c) a(r, c) = 1;
    for (int r = 10; r < 25; ++r)
        for (int c = 15; c < 35; ++c) b(r, c) = 1;
    io::write_mask_png(dir_ / "a.png", a);
    io::write_mask_png(dir_ / "b.png", b);
    io::SceneManifest m;
    m.intrinsics = kSmall;
    io::FrameRecord f;
    f.id = "ov";
    f.instances.push_back({1, rectangle_at(2.0, 1.0), dir_ / "a.png", std::nullopt});
    f.instances.push_back({2, rectangle_at(3.0, 1.0), dir_ / "b.png", std::nullopt});
    m.frames.push_back(f);
    io::save_manifest(m, dir_ / "manifest.json");
    const auto summary = pipeline::annotate(dir_ / "manifest.json", dir_ / "out");
    ASSERT_EQ(summary.diagnostics.size(), 1u);
    EXPECT_EQ(summary.diagnostics[0].kind, "OverlappingMasks");
    EXPECT_EQ(summary.diagnostics[0].instance_id, 2);
    EXPECT_EQ(summary.instances_ok, 1);
}

TEST_F(PipelineTest, StatsSinglePlaneCountBin) {
    pipeline::SynthOptions o = small_synth(6);
    o.plane_count = 3;
    o.centerness = false;
    pipeline::write_synthetic_dataset(dir_ / "gt", o);
    const auto stats = pipeline::compute_stats(dir_ / "gt" / "manifest.json");
    EXPECT_EQ(stats.frame_count, 6);
    for (std::size_t b = 0; b < stats.planes_histogram.size(); ++b)
        EXPECT_EQ(stats.planes_histogram[b], b == 3 ? 6 : 0) << b;
    long long total = 0;
    for (long long c : stats.depth_range_histogram) total += c;
    EXPECT_EQ(total, 6);
    pipeline::write_stats_files(dir_ / "stats", stats);
    EXPECT_NE(io::read_file_bytes(dir_ / "stats" / "stats_planes.csv").find("3,6\n"), std::string::npos);
}

TEST_F(PipelineTest, StatsDepthRangeIsMaxMinusMin) {
    io::SceneManifest m;
    m.intrinsics = kSmall;
    io::FrameRecord f = frame_with_labels(dir_, "r", halves());
    DepthMap d(kSmall.height, kSmall.width, 0.0);
    d(6, 6) = 2.0;
    d(7, 30) = 6.0;
    d(8, 8) = 3.5;
    f.depth = dir_ / "depth" / "r.pfm";
    io::write_pfm(*f.depth, d);
    f.instances.push_back({1, rectangle_at(2.0, 1.0), std::nullopt, std::nullopt});
    f.instances.push_back({2, rectangle_at(6.0, 1.0), std::nullopt, std::nullopt});
    m.frames.push_back(f);
    io::save_manifest(m, dir_ / "manifest.json");
    const auto stats = pipeline::compute_stats(dir_ / "manifest.json");
    EXPECT_EQ(stats.frames[0].depth_range, 4.0);
    ASSERT_EQ(stats.depth_range_histogram.size(), 5u);
    EXPECT_EQ(stats.depth_range_histogram[4], 1);
    EXPECT_EQ(stats.split_counts.at("unspecified"), 1);
}

TEST_F(PipelineTest, StatsEmptyDataset) {
    io::SceneManifest m;
    m.intrinsics = kSmall;
    io::save_manifest(m, dir_ / "manifest.json");
    EXPECT_THROW(pipeline::compute_stats(dir_ / "manifest.json"), EmptyDataset);
}

TEST_F(PipelineTest, EvalCopiesArePerfect) {
    pipeline::write_synthetic_dataset(dir_ / "gt", small_synth(4));
    fs::copy(dir_ / "gt", dir_ / "pred", fs::copy_options::recursive);
    pipeline::EvalOptions o;
    const auto depth = pipeline::evaluate(dir_ / "pred", dir_ / "gt", o);
    ASSERT_EQ(depth.depth_rows.size(), 5u);
    EXPECT_EQ(depth.depth_rows.back().name, "mean");
    EXPECT_EQ(depth.depth_rows.back().metrics.abs_rel, 0.0);
    EXPECT_EQ(depth.depth_rows.back().metrics.sigma1, 1.0);
    o.mode = pipeline::EvalMode::seg;
    const auto seg = pipeline::evaluate(dir_ / "pred", dir_ / "gt", o);
    EXPECT_EQ(seg.seg_rows.back().metrics.iou, 1.0);
    EXPECT_EQ(seg.seg_rows.back().metrics.ber, 0.0);
}

TEST_F(PipelineTest, EvalConstantRatio) {
    pipeline::write_synthetic_dataset(dir_ / "gt", small_synth(3));
    for (int i = 0; i < 3; ++i) {
        const std::string id = pipeline::frame_id(i);
        DepthMap d = io::read_pfm(dir_ / "gt" / "depth" / (id + ".pfm"));
        for (double& v : d.values()) v *= 1.3;
        io::write_pfm(dir_ / "pred" / "depth" / (id + ".pfm"), d);
    }
    const auto rep = pipeline::evaluate(dir_ / "pred", dir_ / "gt", {});
    const DepthMetrics& m = rep.depth_rows.back().metrics;
    // Both maps pass through float32 storage.
    EXPECT_NEAR(m.abs_rel, 0.3, 1e-6);
    EXPECT_EQ(m.sigma1, 0.0);
    EXPECT_EQ(m.sigma2, 1.0);
    EXPECT_EQ(m.sigma3, 1.0);
}

TEST_F(PipelineTest, EvalHandCaseThroughFiles) {
    Grid<std::uint8_t> gt(2, 2, 0), pred(2, 2, 0);
    gt(0, 0) = gt(0, 1) = 1;
    pred(0, 0) = 1;
    io::write_mask_png(dir_ / "gt" / "masks" / "x.png", gt);
    io::write_mask_png(dir_ / "pred" / "masks" / "x.png", pred);
    pipeline::EvalOptions o;
    o.mode = pipeline::EvalMode::seg;
    const auto rep = pipeline::evaluate(dir_ / "pred", dir_ / "gt", o);
    const SegMetrics& m = rep.seg_rows.front().metrics;
    EXPECT_DOUBLE_EQ(m.iou, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.ber, 25.0);
    Grid<double> prob(2, 2, 0.0);
    prob(0, 0) = 0.9;
    io::write_pfm(dir_ / "pred" / "prob" / "x.pfm", prob);
    EXPECT_DOUBLE_EQ(pipeline::evaluate(dir_ / "pred", dir_ / "gt", o).seg_rows.front().metrics.iou, 0.5);
}

TEST_F(PipelineTest, EvalMismatchErrorsNameFiles) {
    io::write_pfm(dir_ / "gt" / "depth" / "a.pfm", Grid<double>(2, 2, 1.0));
    io::write_pfm(dir_ / "pred" / "depth" / "b.pfm", Grid<double>(2, 2, 1.0));
    try {
        pipeline::evaluate(dir_ / "pred", dir_ / "gt", {});
        FAIL();
    } catch (const InvalidInput& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find((dir_ / "pred").string()), std::string::npos);
        EXPECT_NE(what.find("a"), std::string::npos);
    }
    fs::remove(dir_ / "pred" / "depth" / "b.pfm");
    io::write_pfm(dir_ / "pred" / "depth" / "a.pfm", Grid<double>(3, 2, 1.0));
    try {
        pipeline::evaluate(dir_ / "pred", dir_ / "gt", {});
        FAIL();
    } catch (const ShapeError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find((dir_ / "pred" / "depth" / "a.pfm").string()), std::string::npos);
        EXPECT_NE(what.find((dir_ / "gt" / "depth" / "a.pfm").string()), std::string::npos);
    }
    EXPECT_THROW(pipeline::evaluate(dir_ / "pred", dir_ / "empty", {}), EmptyEvaluation);
}

TEST_F(PipelineTest, EvalLossesVanishOnGroundTruth) {
    pipeline::SynthOptions o = small_synth(3);
    o.centerness = false;
    pipeline::write_synthetic_dataset(dir_ / "raw", o);
    pipeline::annotate(dir_ / "raw" / "manifest.json", dir_ / "gt");
    const io::SceneManifest m = io::load_manifest(dir_ / "gt" / "manifest.json");
    for (const auto& f : m.frames) {
        const InstanceMaskSet labels = io::read_mask_png(*f.mask);
        FeatureMap planes(3, labels.rows(), labels.cols(), 0.0);
        for (const auto& inst : f.instances) {
            const PolarPlane p = to_polar(*inst.plane);
            for (int r = 0; r < labels.rows(); ++r) {
                for (int c = 0; c < labels.cols(); ++c) {
                    if (labels(r, c) != inst.id) continue;
                    planes(0, r, c) = p.theta1;
                    planes(1, r, c) = p.theta2;
                    planes(2, r, c) = p.d;
                }
            }
        }
        io::write_pfm(dir_ / "pred" / "planes" / (f.id + ".pfm"), planes);
        fs::create_directories(dir_ / "pred" / "centerness");
        fs::copy(*f.centerness, dir_ / "pred" / "centerness" / (f.id + ".pfm"));
    }
    pipeline::EvalOptions eo;
    eo.mode = pipeline::EvalMode::losses;
    const auto rep = pipeline::evaluate(dir_ / "pred", dir_ / "gt", eo);
    ASSERT_EQ(rep.loss_rows.size(), 3u);
    for (const auto& row : rep.loss_rows) {
        // Residual comes only from float32 storage of the predicted parameters.
        EXPECT_LT(row.plane.aggregate, 1e-4) << row.id;
        EXPECT_EQ(row.skipped_pixels, 0);
        ASSERT_TRUE(row.centerness.has_value());
        EXPECT_FALSE(row.segmentation.has_value());
    }
}

TEST_F(PipelineTest, CliOutputsIndependentOfParallelism) {
    const std::string base = dir_.string();
    ASSERT_EQ(run_cli("synth --output " + base + "/s1 --seed 5 --count 8 --parallel 1"), 0);
    ASSERT_EQ(run_cli("synth --output " + base + "/s4 --seed 5 --count 8 --parallel 4"), 0);
    EXPECT_EQ(oracle::hash_tree(dir_ / "s1"), oracle::hash_tree(dir_ / "s4"));

    ASSERT_EQ(run_cli("annotate --input " + base + "/s1/manifest.json --output " + base + "/a1 --parallel 1"), 0);
    ASSERT_EQ(run_cli("annotate --input " + base + "/s1/manifest.json --output " + base + "/a4 --parallel 4"), 0);
    EXPECT_EQ(oracle::hash_tree(dir_ / "a1"), oracle::hash_tree(dir_ / "a4"));

    ASSERT_EQ(run_cli("eval --pred " + base + "/a1 --gt " + base + "/s1 --depth --output " + base + "/e1 --parallel 1"), 0);
    ASSERT_EQ(run_cli("eval --pred " + base + "/a1 --gt " + base + "/s1 --depth --output " + base + "/e4 --parallel 4"), 0);
    EXPECT_EQ(oracle::hash_tree(dir_ / "e1"), oracle::hash_tree(dir_ / "e4"));
    EXPECT_NE(io::read_file_bytes(dir_ / "e1" / "eval.csv").find("mean,0,0,0,1,1,1"), std::string::npos);
}

TEST_F(PipelineTest, CliRejectsBadInput) {
    EXPECT_EQ(run_cli("annotate --input " + (dir_ / "missing.json").string() + " --output " + (dir_ / "o").string()), 1);
    EXPECT_NE(run_cli("eval --pred a --gt b --mode nonsense"), 0);
    EXPECT_NE(run_cli("frobnicate"), 0);
}
