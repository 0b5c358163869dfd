#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "locmap/sem.hpp"
#include "test_support.hpp"

using namespace locmap;
using locmap::testing::random_grid;

namespace {

std::vector<std::size_t> top_k_oracle(const ScoreMap& m, std::size_t k) {
    std::vector<std::size_t> idx(m.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m[a] > m[b]; });
    idx.resize(k);
    return idx;
}

// Straight-loop SEM: top-K by full sort, cosine per (seed, pixel), max, min-max.
RealGrid sem_oracle(const FeatureStack& f, const ScoreMap& cam, std::size_t k) {
    const auto seeds = top_k_oracle(cam, k);
    RealGrid agg(f.rows(), f.cols(), -2.0);
    for (std::size_t p = 0; p < f.plane_size(); ++p)
        for (auto s : seeds) {
            double dot = 0, ns = 0, np = 0;
            for (std::size_t c = 0; c < f.channels(); ++c) {
                dot += f.at(c, s) * f.at(c, p);
                ns += f.at(c, s) * f.at(c, s);
                np += f.at(c, p) * f.at(c, p);
            }
            const double cos = ns == 0 || np == 0 ? 0.0 : dot / std::sqrt(ns * np);
            agg[p] = std::max(agg[p], cos);
        }
    double lo = agg[0], hi = agg[0];
    for (double v : agg.values()) lo = std::min(lo, v), hi = std::max(hi, v);
    for (auto& v : agg.values()) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    return agg;
}

FeatureStack random_stack(Rng& rng, std::size_t c, std::size_t h, std::size_t w) {
    std::vector<double> v(c * h * w);
    for (auto& x : v) x = rng.normal();
    return FeatureStack(c, h, w, std::move(v));
}

// Two cluster directions plus Gaussian noise; the cluster is the left half.
FeatureStack two_cluster_stack(Rng& rng, std::size_t n, std::size_t channels, double noise) {
    std::vector<double> a(channels), b(channels);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    std::vector<double> v(channels * n * n);
    for (std::size_t p = 0; p < n * n; ++p) {
        const auto& dir = (p % n) < n / 2 ? a : b;
        for (std::size_t c = 0; c < channels; ++c) v[c * n * n + p] = dir[c] + rng.normal(0.0, noise);
    }
    return FeatureStack(channels, n, n, std::move(v));
}

}  // namespace

TEST(SelectSeeds, TwoStrictMaxima) {
    const auto s = select_seeds(ScoreMap(2, 2, {0.9, 0.1, 0.5, 0.7}), 2);
    EXPECT_EQ(s.positions, (std::vector<Pixel>{{0, 0}, {1, 1}}));
    EXPECT_EQ(s.scores, (std::vector<double>{0.9, 0.7}));
}

TEST(SelectSeeds, TiesGoRowMajor) {
    const auto s = select_seeds(ScoreMap(RealGrid(3, 3, 0.4)), 3);
    EXPECT_EQ(s.positions, (std::vector<Pixel>{{0, 0}, {0, 1}, {0, 2}}));
}

TEST(SelectSeeds, MatchesFullSortOracle) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_grid(rng, 16, 16);
        for (std::size_t i = 0; i < g.size(); i += 7) g[i] = 0.5;  // force ties
        const ScoreMap m(g);
        const auto want = top_k_oracle(m, 10);
        const auto got = select_seeds(m, 10);
        ASSERT_EQ(got.size(), 10u);
        for (std::size_t i = 0; i < 10; ++i) {
            EXPECT_EQ(got.positions[i].row * 16 + got.positions[i].col, want[i]);
            if (i) {
                EXPECT_LE(got.scores[i], got.scores[i - 1]);
            }
        }
    }
}

TEST(SelectSeeds, OutOfRangeK) {
    const ScoreMap m(RealGrid(2, 2, 0.5));
    EXPECT_THROW(select_seeds(m, 0), InvalidK);
    EXPECT_THROW(select_seeds(m, 5), InvalidK);
    EXPECT_NO_THROW(select_seeds(m, 4));
}

TEST(SimilarityMaps, HandExamples) {
    // Pixels: (1,0) seed, (0,1), (0.8,0.6), (0,0).
    const FeatureStack f(2, 1, 4, {1, 0, 0.8, 0, 0, 1, 0.6, 0});
    SeedSet seeds{{{0, 0}}, {1.0}};
    const auto s = similarity_maps(f, seeds);
    ASSERT_EQ(s.maps.size(), 1u);
    EXPECT_NEAR(s.maps[0][0], 1.0, 1e-6);
    EXPECT_EQ(s.maps[0][1], 0.0);
    EXPECT_NEAR(s.maps[0][2], 0.8, 1e-12);
    EXPECT_EQ(s.maps[0][3], 0.0);
}

TEST(SimilarityMaps, ValuesInUnitRange) {
    Rng rng(32);
    const auto f = random_stack(rng, 5, 8, 8);
    const auto seeds = select_seeds(ScoreMap(random_grid(rng, 8, 8)), 6);
    for (const auto& m : similarity_maps(f, seeds).maps)
        for (double v : m.values()) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
}

TEST(AggregateMax, Examples) {
    SimilarityStack one{{RealGrid(1, 2, std::vector<double>{0.2, 0.9})}};
    EXPECT_EQ(aggregate_max(one), one.maps[0]);
    SimilarityStack two{{RealGrid(1, 2, std::vector<double>{0.2, 0.9}), RealGrid(1, 2, std::vector<double>{0.5, 0.1})}};
    EXPECT_EQ(aggregate_max(two), RealGrid(1, 2, std::vector<double>({0.5, 0.9})));
    EXPECT_THROW(aggregate_max(SimilarityStack{}), InvalidInput);
}

TEST(AggregateMax, MatchesLoopOracle) {
    Rng rng(33);
    SimilarityStack st;
    for (int k = 0; k < 20; ++k) st.maps.push_back(random_grid(rng, 6, 9, -1.0, 1.0));
    const auto got = aggregate_max(st);
    for (std::size_t p = 0; p < got.size(); ++p) {
        double want = -1.0;
        for (const auto& m : st.maps) want = m[p] > want ? m[p] : want;
        EXPECT_EQ(got[p], want);
    }
}

TEST(SemEnhance, SingleSeedIsNormalizedSimilarity) {
    Rng rng(34);
    const auto f = random_stack(rng, 4, 7, 7);
    const ScoreMap cam(random_grid(rng, 7, 7));
    const auto seeds = select_seeds(cam, 1);
    const auto want = normalize_map(similarity_maps(f, seeds).maps[0]);
    EXPECT_EQ(sem_enhance(f, cam, 1), want);
}

TEST(SemEnhance, OrthogonalClustersGiveExtremes) {
    // Object pixels (left 3 columns) point along (1,0), the rest along (0,1).
    std::vector<double> v(2 * 5 * 6);
    for (std::size_t p = 0; p < 30; ++p) {
        const bool object = p % 6 < 3;
        v[p] = object ? 1.0 : 0.0;
        v[30 + p] = object ? 0.0 : 1.0;
    }
    const FeatureStack f(2, 5, 6, v);
    RealGrid cam(5, 6, 0.0);
    cam(2, 1) = 1.0;
    cam(3, 1) = 0.8;
    const auto out = sem_enhance(f, ScoreMap(cam), 2);
    for (std::size_t p = 0; p < 30; ++p) EXPECT_EQ(out[p], p % 6 < 3 ? 1.0 : 0.0);
}

TEST(SemEnhance, MatchesNaiveOracleOnTwoClusters) {
    Rng rng(35);
    const auto f = two_cluster_stack(rng, 32, 8, 0.05);
    const ScoreMap cam(random_grid(rng, 32, 32));
    const auto got = sem_enhance(f, cam, 20);
    const auto want = sem_oracle(f, cam, 20);
    for (std::size_t p = 0; p < got.size(); ++p) EXPECT_NEAR(got[p], want[p], 1e-6);
}

TEST(SemEnhance, ShapeMismatch) {
    Rng rng(36);
    EXPECT_THROW(sem_enhance(random_stack(rng, 2, 4, 4), ScoreMap(random_grid(rng, 4, 5)), 1), DimensionError);
}

TEST(SemProperties, MonotoneInK) {
    Rng rng(37);
    const auto f = random_stack(rng, 6, 10, 10);
    const ScoreMap cam(random_grid(rng, 10, 10));
    auto prev = sem_aggregate(f, cam, 1);
    for (std::size_t k = 2; k <= 100; ++k) {
        const auto cur = sem_aggregate(f, cam, k);
        for (std::size_t p = 0; p < cur.size(); ++p) ASSERT_GE(cur[p], prev[p]) << "k=" << k;
        prev = cur;
    }
}

TEST(SemProperties, SeedsReachOne) {
    Rng rng(38);
    const auto f = random_stack(rng, 6, 9, 9);
    const ScoreMap cam(random_grid(rng, 9, 9));
    const auto agg = sem_aggregate(f, cam, 12);
    const auto out = sem_enhance(f, cam, 12);
    for (const auto& s : select_seeds(cam, 12).positions) {
        EXPECT_EQ(agg(s.row, s.col), 1.0);
        EXPECT_EQ(out(s.row, s.col), 1.0);
    }
}

TEST(SemProperties, PerPixelScaleInvariance) {
    Rng rng(39);
    const auto f = random_stack(rng, 5, 8, 8);
    const ScoreMap cam(random_grid(rng, 8, 8));
    std::vector<double> scaled = f.data();
    for (std::size_t p = 0; p < 64; ++p) {
        const double s = rng.uniform(0.1, 10.0);
        for (std::size_t c = 0; c < 5; ++c) scaled[c * 64 + p] *= s;
    }
    const auto a = sem_enhance(f, cam, 7);
    const auto b = sem_enhance(FeatureStack(5, 8, 8, scaled), cam, 7);
    for (std::size_t p = 0; p < 64; ++p) EXPECT_NEAR(a[p], b[p], 1e-12);
}

TEST(SemProperties, SeedOrderDoesNotMatter) {
    Rng rng(40);
    const auto f = random_stack(rng, 4, 6, 6);
    auto seeds = select_seeds(ScoreMap(random_grid(rng, 6, 6)), 8);
    const auto a = aggregate_max(similarity_maps(f, seeds));
    std::reverse(seeds.positions.begin(), seeds.positions.end());
    std::reverse(seeds.scores.begin(), seeds.scores.end());
    EXPECT_EQ(aggregate_max(similarity_maps(f, seeds)), a);
}

TEST(SemProperties, ZeroNormPixelsScoreZero) {
    const FeatureStack f(2, 1, 3, {1, 0, -1, 0, 0, 0});
    const auto agg = sem_aggregate(f, ScoreMap(1, 3, {1.0, 0.0, 0.0}), 1);
    EXPECT_EQ(agg[1], 0.0);
    EXPECT_EQ(agg[2], -1.0);
    SemOptions clamp;
    clamp.clamp_negative = true;
    EXPECT_EQ(sem_aggregate(f, ScoreMap(1, 3, {1.0, 0.0, 0.0}), 1, clamp)[2], 0.0);
}
