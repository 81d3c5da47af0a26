#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>
#include <unistd.h>

#include "glass3d/errors.hpp"
#include "glass3d/io.hpp"

using namespace glass3d;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("glass3d_io_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
};

Grid<double> random_float_grid(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    Grid<double> g(rows, cols);
    for (double& v : g.values()) v = static_cast<float>(u(rng));
    return g;
}

std::string le_floats(std::initializer_list<float> vals) {
    std::string s;
    for (float f : vals) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
    return s;
}

std::string be_floats(std::initializer_list<float> vals) {
    std::string s;
    for (float f : vals) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
    return s;
}

io::SceneManifest sample_manifest(const fs::path& dir) {
    io::write_mask_png(dir / "masks" / "a.png", Grid<std::uint8_t>(4, 6, 1));
    io::write_pfm(dir / "depth" / "a.pfm", Grid<double>(4, 6, 2.0));
    io::SceneManifest m;
    m.intrinsics = {525, 520.5, 3.0, 2.0, 6, 4};
    io::FrameRecord f;
    f.id = "frame_01";
    f.split = "train";
    f.camera_from_world = RigidTransform(Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix(),
                                         Vec3(0.1, -0.2, 1.0 / 3.0));
    f.mask = dir / "masks" / "a.png";
    f.depth = dir / "depth" / "a.pfm";
    io::InstanceRecord inst;
    inst.id = 1;
    inst.box_world = {{0, 0, 2}, {1, 0, 2}, {1, 1, 2.1}, {0.1, 1, 2}};
    inst.plane = Plane{Vec3(0, 0, -1), 2.0};
    f.instances.push_back(inst);
    m.frames.push_back(f);
    return m;
}

std::string manifest_text(const std::string& frames, int version = 1) {
    return std::string(R"({"format":"glass3d-manifest","version":)") + std::to_string(version) +
           R"(,"intrinsics":{"fx":1,"fy":1,"cx":1,"cy":1,"width":4,"height":4},"frames":)" + frames + "}";
}

const char* kIdentityPose = R"("camera_from_world":{"rotation":[[1,0,0],[0,1,0],[0,0,1]],"translation":[0,0,0]})";

}  // namespace

TEST_F(IoTest, PfmSingleChannelRoundTripIsBitExact) {
    std::mt19937_64 rng(1);
    const Grid<double> g = random_float_grid(rng, 17, 23);
    io::write_pfm(dir_ / "a.pfm", g);
    EXPECT_EQ(io::read_pfm(dir_ / "a.pfm"), g);
}

TEST_F(IoTest, PfmThreeChannelRoundTripIsBitExact) {
    std::mt19937_64 rng(2);
    FeatureMap f(3, 5, 7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : f.values()) v = static_cast<float>(u(rng));
    io::write_pfm(dir_ / "p.pfm", f);
    EXPECT_EQ(io::read_pfm_channels(dir_ / "p.pfm"), f);
    EXPECT_THROW(io::read_pfm(dir_ / "p.pfm"), FormatError);
    EXPECT_THROW(io::write_pfm(dir_ / "q.pfm", FeatureMap(2, 2, 2)), ShapeError);
}

TEST_F(IoTest, PfmStoresFloat32) {
    Grid<double> g(1, 1, 0.1);
    io::write_pfm(dir_ / "f.pfm", g);
    EXPECT_EQ(io::read_pfm(dir_ / "f.pfm")(0, 0), static_cast<double>(0.1f));
}

TEST_F(IoTest, PfmLayoutIsLittleEndianBottomUp) {
    Grid<double> g(2, 2);
    g(0, 0) = 1;
    g(0, 1) = 2;
    g(1, 0) = 3;
    g(1, 1) = 4;
    EXPECT_EQ(io::encode_pfm(g), "Pf\n2 2\n-1.0\n" + le_floats({3, 4, 1, 2}));
}

TEST_F(IoTest, PfmReadsBigEndian) {
    io::write_file_bytes(dir_ / "be.pfm", "Pf\n2 1\n1.0\n" + be_floats({5.5f, -2.0f}));
    const Grid<double> g = io::read_pfm(dir_ / "be.pfm");
    EXPECT_EQ(g(0, 0), 5.5);
    EXPECT_EQ(g(0, 1), -2.0);
}

TEST_F(IoTest, MalformedPfmRejected) {
    io::write_file_bytes(dir_ / "bad1.pfm", "P6\n2 2\n-1.0\n");
    EXPECT_THROW(io::read_pfm(dir_ / "bad1.pfm"), FormatError);
    io::write_file_bytes(dir_ / "bad2.pfm", "Pf\n2 2\n-1.0\n" + le_floats({1, 2, 3}));
    try {
        io::read_pfm(dir_ / "bad2.pfm");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("bad2.pfm"), std::string::npos);
    }
    io::write_file_bytes(dir_ / "bad3.pfm", "Pf\nx 2\n-1.0\n");
    EXPECT_THROW(io::read_pfm(dir_ / "bad3.pfm"), FormatError);
    EXPECT_THROW(io::read_pfm(dir_ / "missing.pfm"), Error);
}

TEST_F(IoTest, MaskPngRoundTrip) {
    Grid<std::uint8_t> m(9, 13);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 13; ++c) m(r, c) = static_cast<std::uint8_t>((r * 13 + c) % 256);
    io::write_mask_png(dir_ / "m.png", m);
    EXPECT_EQ(io::read_mask_png(dir_ / "m.png"), m);
    io::write_file_bytes(dir_ / "junk.png", "not a png");
    EXPECT_THROW(io::read_mask_png(dir_ / "junk.png"), FormatError);
}

TEST_F(IoTest, DepthPng16InMillimetersClamped) {
    DepthMap d(1, 4);
    d(0, 0) = 0.0;
    d(0, 1) = 1.2344;
    d(0, 2) = 17.76;
    d(0, 3) = 80.0;
    io::write_depth_png16(dir_ / "d.png", d);
    const Grid<std::uint16_t> q = io::read_png16(dir_ / "d.png");
    EXPECT_EQ(q(0, 0), 0);
    EXPECT_EQ(q(0, 1), 1234);
    EXPECT_EQ(q(0, 2), 17760);
    EXPECT_EQ(q(0, 3), 65535);
    EXPECT_THROW(io::read_mask_png(dir_ / "d.png"), FormatError);
}

TEST_F(IoTest, ManifestRoundTrip) {
    const io::SceneManifest m = sample_manifest(dir_);
    io::save_manifest(m, dir_ / "manifest.json");
    const io::SceneManifest back = io::load_manifest(dir_ / "manifest.json");
    EXPECT_EQ(back.intrinsics.fy, 520.5);
    ASSERT_EQ(back.frames.size(), 1u);
    const io::FrameRecord& f = back.frames[0];
    EXPECT_EQ(f.id, "frame_01");
    EXPECT_EQ(f.split, "train");
    EXPECT_EQ(f.camera_from_world.rotation(), m.frames[0].camera_from_world.rotation());
    EXPECT_EQ(f.camera_from_world.translation(), m.frames[0].camera_from_world.translation());
    EXPECT_TRUE(fs::equivalent(*f.mask, dir_ / "masks" / "a.png"));
    ASSERT_EQ(f.instances.size(), 1u);
    EXPECT_EQ(f.instances[0].box_world, m.frames[0].instances[0].box_world);
    EXPECT_EQ(*f.instances[0].plane, *m.frames[0].instances[0].plane);
    // Paths are stored relative to the manifest.
    const std::string text = io::read_file_bytes(dir_ / "manifest.json");
    EXPECT_NE(text.find("\"masks/a.png\""), std::string::npos);
    EXPECT_EQ(text.find(dir_.string()), std::string::npos);
    // Saving again is byte-identical.
    io::save_manifest(back, dir_ / "again.json");
    EXPECT_EQ(io::read_file_bytes(dir_ / "again.json"), text);
}

TEST_F(IoTest, ManifestSchemaErrors) {
    EXPECT_THROW(io::load_manifest(dir_ / "nope.json"), Error);
    EXPECT_THROW(io::parse_manifest("{", dir_, false), FormatError);
    EXPECT_THROW(io::parse_manifest(manifest_text("[]", 2), dir_, false), FormatError);
    EXPECT_THROW(io::parse_manifest(R"({"format":"other","version":1})", dir_, false), FormatError);
    const std::string frame = std::string(R"({"id":"a",)") + kIdentityPose + R"(,"mask":"m.png","instances":[]})";
    EXPECT_NO_THROW(io::parse_manifest(manifest_text("[" + frame + "]"), dir_, false));
    // The referenced mask does not exist on disk.
    EXPECT_THROW(io::parse_manifest(manifest_text("[" + frame + "]"), dir_, true), FormatError);
    EXPECT_THROW(io::parse_manifest(manifest_text("[" + frame + "," + frame + "]"), dir_, false), FormatError);
    for (const char* bad : {"", "../x", ".hidden", "a b", "a/b"}) {
        const std::string f = std::string(R"({"id":")") + bad + "\"," + kIdentityPose + R"(,"mask":"m.png","instances":[]})";
        EXPECT_THROW(io::parse_manifest(manifest_text("[" + f + "]"), dir_, false), FormatError) << bad;
    }
    const std::string skew = R"({"id":"a","camera_from_world":{"rotation":[[1,0,0],[0,1,0],[0,0,-1]],"translation":[0,0,0]},"mask":"m.png","instances":[]})";
    EXPECT_THROW(io::parse_manifest(manifest_text("[" + skew + "]"), dir_, false), FormatError);
    const std::string no_mask = std::string(R"({"id":"a",)") + kIdentityPose + R"(,"instances":[{"id":1,"box_world":[]}]})";
    EXPECT_THROW(io::parse_manifest(manifest_text("[" + no_mask + "]"), dir_, false), FormatError);
    const std::string dup = std::string(R"({"id":"a",)") + kIdentityPose +
                            R"(,"mask":"m.png","instances":[{"id":1,"box_world":[]},{"id":1,"box_world":[]}]})";
    EXPECT_THROW(io::parse_manifest(manifest_text("[" + dup + "]"), dir_, false), FormatError);
}
