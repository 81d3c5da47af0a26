#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "glass3d/centerness.hpp"
#include "glass3d/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace glass3d;

namespace {

std::set<std::pair<int, int>> as_set(const std::vector<Pixel>& px) {
    std::set<std::pair<int, int>> s;
    for (const Pixel& p : px) s.insert({p.row, p.col});
    return s;
}

BinaryMask square(int rows, int cols, int r0, int c0, int side) {
    BinaryMask m(rows, cols, 0);
    for (int r = r0; r < r0 + side; ++r)
        for (int c = c0; c < c0 + side; ++c) m(r, c) = 1;
    return m;
}

}  // namespace

TEST(Contour, SinglePixel) {
    BinaryMask m(3, 3, 0);
    m(1, 1) = 1;
    EXPECT_EQ(as_set(contour(m)), (std::set<std::pair<int, int>>{{1, 1}}));
}

TEST(Contour, SquareRing) {
    const auto ring = as_set(contour(square(5, 5, 1, 1, 3)));
    EXPECT_EQ(ring.size(), 8u);
    EXPECT_FALSE(ring.contains({2, 2}));
}

TEST(Contour, FullFrameIsBorder) {
    const BinaryMask m(6, 7, 1);
    std::set<std::pair<int, int>> expected;
    for (const auto& p : oracle::contour_pixels(m, 1)) expected.insert({p[0], p[1]});
    EXPECT_EQ(as_set(contour(m)), expected);
    EXPECT_EQ(expected.size(), static_cast<std::size_t>(2 * 6 + 2 * 7 - 4));
}

TEST(Contour, EmptyMaskRejected) {
    EXPECT_THROW(contour(BinaryMask(4, 4, 0)), EmptyInstance);
}

TEST(Centerness, SinglePixelIsZero) {
    InstanceMaskSet m(3, 3, 0);
    m(1, 1) = 1;
    EXPECT_EQ(centerness_map(m)(1, 1), 0.0);
}

TEST(Centerness, OddSquareCenterValue) {
    for (int side = 3; side <= 41; side += 2) {
        const InstanceMaskSet m = square(side + 6, side + 4, 3, 2, side);
        const CenternessMap c = centerness_map(m);
        const int mid = side / 2;
        EXPECT_NEAR(c(3 + mid, 2 + mid), std::pow(2.0, -0.25), 1e-12) << "side " << side;
    }
}

TEST(Centerness, ContourPixelsAreZeroAndRangeIsUnit) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 30; ++t) {
        const InstanceMaskSet m = fixture::random_blob(rng);
        const CenternessMap c = centerness_map(m);
        for (int label = 1; label <= max_label(m); ++label)
            for (const auto& p : oracle::contour_pixels(m, label)) EXPECT_EQ(c(p[0], p[1]), 0.0);
        for (int r = 0; r < m.rows(); ++r) {
            for (int col = 0; col < m.cols(); ++col) {
                EXPECT_GE(c(r, col), 0.0);
                EXPECT_LE(c(r, col), 1.0);
                if (m(r, col) == 0) EXPECT_EQ(c(r, col), 0.0);
            }
        }
    }
}

TEST(Centerness, ExactAgainstBruteForceOracle) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 100; ++t) {
        const InstanceMaskSet m = fixture::random_blob(rng);
        const CenternessMap fast = centerness_map(m);
        const CenternessMap brute = oracle::brute_centerness(m);
        ASSERT_EQ(fast, brute) << "blob " << t << " (" << m.rows() << "x" << m.cols() << ")";
        ASSERT_EQ(reference::centerness_map(m), brute) << "blob " << t;
    }
}

TEST(Centerness, TranslationInvariance) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
        const InstanceMaskSet blob = fixture::random_blob(rng);
        // Embed with a one-pixel background frame so the image border is not
        // part of the contour, then shift.
        InstanceMaskSet a(blob.rows() + 8, blob.cols() + 8, 0), b(blob.rows() + 8, blob.cols() + 8, 0);
        for (int r = 0; r < blob.rows(); ++r) {
            for (int c = 0; c < blob.cols(); ++c) {
                a(r + 1, c + 1) = blob(r, c);
                b(r + 6, c + 4) = blob(r, c);
            }
        }
        const CenternessMap ca = centerness_map(a), cb = centerness_map(b);
        for (int r = 0; r < blob.rows(); ++r)
            for (int c = 0; c < blob.cols(); ++c) ASSERT_EQ(ca(r + 1, c + 1), cb(r + 6, c + 4));
    }
}

TEST(Fuse, IdentityAnnihilationAndArithmetic) {
    FeatureMap f(2, 3, 4, 2.0);
    EXPECT_EQ(fuse(f, CenternessMap(3, 4, 0.0)).values()[5], 2.0);
    const FeatureMap zero = fuse(f, CenternessMap(3, 4, 1.0));
    for (double v : zero.values()) EXPECT_EQ(v, 0.0);
    const FeatureMap q = fuse(f, CenternessMap(3, 4, 0.25));
    EXPECT_EQ(q(1, 2, 3), 1.5);
}

TEST(Fuse, LinearInFeatures) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3), cu(0, 1);
    FeatureMap f1(3, 5, 6), f2(3, 5, 6), mix(3, 5, 6);
    CenternessMap c(5, 6);
    const double a = 0.7, b = -1.9;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < 5; ++r) {
            for (int col = 0; col < 6; ++col) {
                f1(ch, r, col) = u(rng);
                f2(ch, r, col) = u(rng);
                mix(ch, r, col) = a * f1(ch, r, col) + b * f2(ch, r, col);
            }
        }
    }
    for (double& v : c.values()) v = cu(rng);
    const FeatureMap lhs = fuse(mix, c), g1 = fuse(f1, c), g2 = fuse(f2, c);
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < 5; ++r)
            for (int col = 0; col < 6; ++col)
                EXPECT_NEAR(lhs(ch, r, col), a * g1(ch, r, col) + b * g2(ch, r, col), 1e-14);
}

TEST(Fuse, ShapeMismatch) {
    EXPECT_THROW(fuse(FeatureMap(1, 3, 4), CenternessMap(4, 3)), ShapeError);
}

TEST(CenternessLoss, ClosedForms) {
    EXPECT_NEAR(centerness_loss(CenternessMap(4, 4, 0.5), CenternessMap(4, 4, 0.0)), std::log(2.0), 1e-15);
    EXPECT_NEAR(centerness_loss(CenternessMap(4, 4, 0.5), CenternessMap(4, 4, 1.0)), std::log(2.0), 1e-15);
    CenternessMap hard(2, 2, 0.0);
    hard(0, 1) = 1.0;
    hard(1, 0) = 1.0;
    EXPECT_LE(centerness_loss(hard, hard), 1.01e-7);
    EXPECT_THROW(centerness_loss(CenternessMap(2, 2), CenternessMap(2, 3)), ShapeError);
}
