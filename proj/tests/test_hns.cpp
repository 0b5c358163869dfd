#include <gtest/gtest.h>

#include <cmath>

#include "locmap/fixtures.hpp"
#include "locmap/hns.hpp"
#include "test_support.hpp"

using namespace locmap;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

// Central difference of hns_loss in pixel i.
double numeric_grad(RealGrid pred, const BinaryMask& gt, std::size_t i, double lambda, LossMode mode, double h = 1e-5) {
    const double p = pred[i];
    pred[i] = p + h;
    const double up = hns_loss(pred, gt, lambda, mode);
    pred[i] = p - h;
    const double down = hns_loss(pred, gt, lambda, mode);
    return (up - down) / (2 * h);
}

}  // namespace

TEST(HnsLoss, TwoPixelExample) {
    const RealGrid pred(1, 2, std::vector<double>{0.8, 0.6});
    const BinaryMask gt(1, 2, std::vector<std::uint8_t>{1, 0});
    // alpha = beta = 1/2, lambda = 1.
    const double pos = 0.5 * std::log(0.8), neg = 0.5 * std::log(0.4), hard = 0.5 * 0.6 * std::log(0.4);
    EXPECT_NEAR(hns_loss(pred, gt, 1.0, LossMode::Hns), -0.5 * (pos + neg + hard), 1e-12);
    EXPECT_NEAR(hns_loss(pred, gt, 1.0, LossMode::Hns), 0.42230, 5e-6);
    EXPECT_NEAR(hns_loss(pred, gt, 1.0, LossMode::Vanilla), 0.28486, 5e-6);
}

TEST(HnsLoss, NonNegativeAndShapeChecked) {
    Rng rng(81);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = locmap::testing::random_grid(rng, 5, 5);
        const auto g = locmap::testing::random_mask(rng, 5, 5);
        EXPECT_GE(hns_loss(p, g, 1.0, LossMode::Hns), hns_loss(p, g, 1.0, LossMode::Vanilla));
        EXPECT_GE(hns_loss(p, g, 1.0, LossMode::Vanilla), 0.0);
    }
    EXPECT_THROW(hns_loss(RealGrid(2, 2, 0.5), BinaryMask(2, 3)), DimensionError);
}

TEST(HnsGradient, TwoPixelMatchesFiniteDifferences) {
    const RealGrid pred(1, 2, std::vector<double>{0.8, 0.6});
    const BinaryMask gt(1, 2, std::vector<std::uint8_t>{1, 0});
    for (auto mode : {LossMode::Hns, LossMode::Vanilla}) {
        const auto g = hns_gradient(pred, gt, 1.0, mode);
        for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(rel_err(g[i], numeric_grad(pred, gt, i, 1.0, mode)), 1e-4);
    }
}

TEST(HnsGradient, RandomInstancesMatchFiniteDifferences) {
    Rng rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rows = static_cast<std::size_t>(rng.integer(1, 4)), cols = static_cast<std::size_t>(rng.integer(1, 4));
        const auto pred = locmap::testing::random_grid(rng, rows, cols, 0.02, 0.98);
        const auto gt = locmap::testing::random_mask(rng, rows, cols, rng.uniform());
        const double lambda = rng.uniform(0.1, 3.0);
        const auto mode = rng.bernoulli(0.5) ? LossMode::Hns : LossMode::Vanilla;
        const auto g = hns_gradient(pred, gt, lambda, mode);
        for (std::size_t i = 0; i < pred.size(); ++i)
            ASSERT_LT(rel_err(g[i], numeric_grad(pred, gt, i, lambda, mode)), 1e-4) << "trial " << trial;
    }
}

TEST(HnsGradient, SaturatedPositive) {
    const RealGrid pred(1, 2, std::vector<double>{1.0, 0.3});
    const BinaryMask gt(1, 2, std::vector<std::uint8_t>{1, 0});
    const auto g = hns_gradient(pred, gt, 1.0, LossMode::Hns);
    EXPECT_DOUBLE_EQ(g[0], -0.5 / (2 * (1 - edge_eps)));
}

TEST(HnsGradient, NegativeGradientIncreasesWithScore) {
    const LossWeights w{0.3, 0.7, 3, 7};
    for (auto mode : {LossMode::Hns, LossMode::Vanilla}) {
        const double a = hns_pixel_gradient(0.1, false, w, 1.0, mode), b = hns_pixel_gradient(0.5, false, w, 1.0, mode),
                     c = hns_pixel_gradient(0.9, false, w, 1.0, mode);
        EXPECT_LT(a, b);
        EXPECT_LT(b, c);
    }
    // The suppression term makes confident negatives cost more.
    EXPECT_GT(hns_pixel_gradient(0.9, false, w, 1.0, LossMode::Hns), hns_pixel_gradient(0.9, false, w, 1.0, LossMode::Vanilla));
}

TEST(ToyFit, ZeroStepsKeepsInitialPredictor) {
    const auto fx = make_clutter_fixture(1);
    ToyFitOptions o;
    o.steps = 0;
    const auto r = toy_fit(fx.features, fx.edges, o);
    EXPECT_EQ(r.predictor, (LinearEdgePredictor{{0.0, 0.0, 0.0}, 0.0}));
    EXPECT_EQ(r.initial_loss, r.final_loss);
}

TEST(ToyFit, SeparableFixtureIsLearnedInBothModes) {
    const auto fx = make_clutter_fixture(2, 64, 0.0);
    for (auto mode : {LossMode::Hns, LossMode::Vanilla}) {
        ToyFitOptions o;
        o.mode = mode;
        const auto r = toy_fit(fx.features, fx.edges, o);
        EXPECT_GE(r.recall, 0.99);
        EXPECT_LT(r.final_loss, r.initial_loss);
    }
}

TEST(ToyFit, HnsScoresClutterLower) {
    for (std::uint64_t seed = 10; seed < 13; ++seed) {
        const auto fx = make_clutter_fixture(seed);
        ToyFitOptions o;
        o.mode = LossMode::Vanilla;
        const auto vanilla = toy_fit(fx.features, fx.edges, o, fx.clutter);
        o.mode = LossMode::Hns;
        const auto hns = toy_fit(fx.features, fx.edges, o, fx.clutter);
        EXPECT_LT(hns.mean_hard_negative, vanilla.mean_hard_negative) << "seed " << seed;
    }
}

TEST(ToyFit, DivergenceIsReported) {
    // Negatives sit further along the only feature than positives, so one
    // huge step drives every score to 0 and the positives pay the clamp cost.
    std::vector<double> f(16, 2.0);
    BinaryMask edges(4, 4);
    for (std::size_t p : {0u, 5u, 10u, 15u}) {
        f[p] = 1.0;
        edges.set(p, true);
    }
    ToyFitOptions o;
    o.learning_rate = 1e6;
    o.lambda = 0.1;
    try {
        toy_fit(FeatureStack(1, 4, 4, f), edges, o);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.step(), 0u);
    }
}

TEST(ToyFit, ShapeMismatch) {
    const auto fx = make_clutter_fixture(4);
    EXPECT_THROW(toy_fit(fx.features, BinaryMask(3, 3)), DimensionError);
}
