#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "locmap/core.hpp"
#include "test_support.hpp"

using namespace locmap;
using locmap::testing::random_grid;

namespace {

// Independent bilinear resize: half-pixel centres, clamped source coordinate.
RealGrid resize_oracle(const RealGrid& in, std::size_t out_rows, std::size_t out_cols) {
    RealGrid out(out_rows, out_cols);
    auto source = [](std::size_t x, std::size_t n_in, std::size_t n_out) {
        double s = (static_cast<double>(x) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
        if (s < 0) s = 0;
        if (s > static_cast<double>(n_in - 1)) s = static_cast<double>(n_in - 1);
        return s;
    };
    for (std::size_t y = 0; y < out_rows; ++y)
        for (std::size_t x = 0; x < out_cols; ++x) {
            const double sy = source(y, in.rows(), out_rows), sx = source(x, in.cols(), out_cols);
            const auto y0 = static_cast<std::size_t>(std::floor(sy)), x0 = static_cast<std::size_t>(std::floor(sx));
            const auto y1 = std::min(y0 + 1, in.rows() - 1), x1 = std::min(x0 + 1, in.cols() - 1);
            const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
            out(y, x) = (1 - fy) * ((1 - fx) * in(y0, x0) + fx * in(y0, x1)) +
                        fy * ((1 - fx) * in(y1, x0) + fx * in(y1, x1));
        }
    return out;
}

}  // namespace

TEST(Grid, RejectsWrongValueCount) {
    EXPECT_THROW(RealGrid(2, 2, std::vector<double>{1, 2, 3}), InvalidInput);
}

TEST(Grid, RowMajorIndexing) {
    const RealGrid g(2, 3, std::vector<double>{0, 1, 2, 3, 4, 5});
    EXPECT_EQ(g(1, 0), 3);
    EXPECT_EQ(g(0, 2), 2);
    EXPECT_EQ(g[4], g(1, 1));
}

TEST(ScoreMap, ValidatesRangeAndShape) {
    EXPECT_THROW(ScoreMap(RealGrid(0, 3)), InvalidInput);
    EXPECT_THROW(ScoreMap(1, 2, {0.5, 1.5}), InvalidInput);
    EXPECT_THROW(ScoreMap(1, 2, {-0.1, 0.5}), InvalidInput);
    EXPECT_THROW(ScoreMap(1, 2, {std::numeric_limits<double>::quiet_NaN(), 0.5}), InvalidInput);
    EXPECT_NO_THROW(ScoreMap(1, 2, {0.0, 1.0}));
}

TEST(BinaryMask, RejectsNonBinary) {
    EXPECT_THROW(BinaryMask(1, 2, std::vector<std::uint8_t>{0, 2}), InvalidInput);
    BinaryMask m(2, 2);
    m.set(1, 1, true);
    EXPECT_EQ(m.count(), 1u);
    EXPECT_TRUE(m(1, 1));
}

TEST(FeatureStack, ValidatesDimensionsAndFiniteness) {
    EXPECT_THROW(FeatureStack(0, 1, 1, {}), InvalidInput);
    EXPECT_THROW(FeatureStack(1, 2, 2, {1, 2, 3}), InvalidInput);
    EXPECT_THROW(FeatureStack(1, 1, 1, {std::numeric_limits<double>::infinity()}), InvalidInput);
    const FeatureStack f(2, 1, 2, {1, 2, 3, 4});
    EXPECT_EQ(f(1, 0, 1), 4);
    EXPECT_EQ(f.at(1, 0), 3);
}

TEST(NormalizeMap, LinearRescale) {
    const auto m = normalize_map(RealGrid(2, 2, std::vector<double>{1, 3, 3, 5}));
    EXPECT_EQ(m.grid(), RealGrid(2, 2, std::vector<double>{0, 0.5, 0.5, 1}));
}

TEST(NormalizeMap, ConstantGivesZeros) {
    const auto m = normalize_map(RealGrid(2, 2, 2.0));
    EXPECT_EQ(m.grid(), RealGrid(2, 2, 0.0));
}

TEST(NormalizeMap, RejectsNonFinite) {
    EXPECT_THROW(normalize_map(RealGrid(1, 2, std::vector<double>{0, std::nan("")})), InvalidInput);
    EXPECT_THROW(normalize_map(RealGrid(0, 0)), InvalidInput);
}

TEST(NormalizeMap, RandomReachesZeroAndOne) {
    Rng rng(11);
    const auto m = normalize_map(random_grid(rng, 16, 16, -3.0, 7.0));
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        lo = std::min(lo, m[i]);
        hi = std::max(hi, m[i]);
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
}

TEST(NormalizeMap, IdempotentAndAffineInvariant) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto raw = random_grid(rng, 9, 7, -2.0, 2.0);
        const auto once = normalize_map(raw);
        EXPECT_EQ(normalize_map(once.grid()), once);
        const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
        RealGrid shifted = raw;
        for (auto& v : shifted.values()) v = a * v + b;
        const auto other = normalize_map(shifted);
        for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(other[i], once[i], 1e-12);
    }
}

TEST(QuantizeMap, EndpointsAndHalfUp) {
    EXPECT_EQ(quantize_map(ScoreMap(1, 2, {0.0, 1.0})), QuantizedMap(1, 2, std::vector<std::uint8_t>{0, 255}));
    EXPECT_EQ(quantize_map(ScoreMap(1, 1, std::vector<double>{0.5}))[0], 128);
}

TEST(QuantizeMap, ElementwiseOracleAndMonotone) {
    Rng rng(13);
    const ScoreMap m(random_grid(rng, 16, 16));
    const auto q = quantize_map(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(q[i], static_cast<int>(std::floor(m[i] * 255.0 + 0.5)));
        for (std::size_t j = 0; j < m.size(); j += 17)
            if (m[i] <= m[j]) {
                EXPECT_LE(q[i], q[j]);
            }
    }
}

TEST(ResizeBilinear, HalfPixelExample) {
    const auto out = resize_bilinear(ScoreMap(1, 2, {0.0, 1.0}), 1, 4);
    EXPECT_EQ(out.grid(), RealGrid(1, 4, std::vector<double>{0, 0.25, 0.75, 1}));
}

TEST(ResizeBilinear, ConstantStaysConstant) {
    const auto out = resize_bilinear(ScoreMap(RealGrid(2, 2, 0.7)), 4, 4);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i], 0.7);
}

TEST(ResizeBilinear, IdentityIsExact) {
    Rng rng(14);
    const ScoreMap m(random_grid(rng, 5, 6));
    EXPECT_EQ(resize_bilinear(m, 5, 6), m);
}

TEST(ResizeBilinear, ZeroTargetThrows) {
    EXPECT_THROW(resize_bilinear(ScoreMap(RealGrid(2, 2, 0.1)), 0, 3), InvalidInput);
}

TEST(ResizeBilinear, MatchesOracleAndKeepsBounds) {
    Rng rng(15);
    for (int trial = 0; trial < 40; ++trial) {
        const auto rows = static_cast<std::size_t>(rng.integer(1, 12)), cols = static_cast<std::size_t>(rng.integer(1, 12));
        const auto out_rows = static_cast<std::size_t>(rng.integer(1, 30)),
                   out_cols = static_cast<std::size_t>(rng.integer(1, 30));
        const auto in = random_grid(rng, rows, cols, 0.2, 0.9);
        const auto got = resize_bilinear(in, out_rows, out_cols);
        const auto want = resize_oracle(in, out_rows, out_cols);
        double lo = 1, hi = 0;
        for (double v : in.values()) lo = std::min(lo, v), hi = std::max(hi, v);
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got[i], want[i], 1e-12);
            EXPECT_GE(got[i], lo);
            EXPECT_LE(got[i], hi);
        }
    }
}

TEST(ToGray, LumaWeights) {
    const RgbImage rgb{1, 3, {255, 0, 0, 0, 255, 0, 0, 0, 255}};
    const auto g = to_gray(rgb);
    EXPECT_NEAR(g[0], 0.299 * 255, 1e-9);
    EXPECT_NEAR(g[1], 0.587 * 255, 1e-9);
    EXPECT_NEAR(g[2], 0.114 * 255, 1e-9);
}

TEST(BBox, InclusiveArea) {
    const BBox b{2, 3, 4, 7};
    EXPECT_EQ(b.width(), 3);
    EXPECT_EQ(b.height(), 5);
    EXPECT_EQ(b.area(), 15);
    EXPECT_TRUE(b.inside(8, 5));
    EXPECT_FALSE(b.inside(7, 5));
}
