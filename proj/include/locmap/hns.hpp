#pragma once

// Class-balanced boundary cross-entropy with a hard-negative suppression term:
//
//   L = -(1/N) sum_ij [ beta * B * log P
//                       + lambda * alpha * (1 - B) * log(1 - P)
//                       + alpha * (1 - B) * P * log(1 - P) ]      (hns mode only)
//
// alpha = |B+| / N, beta = |B-| / N, N = |B+| + |B-|. The global minus sign
// makes the loss non-negative so that minimizing it maximizes likelihood.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap {

/// Predictions are clamped to [edge_eps, 1 - edge_eps] before any log.
inline constexpr double edge_eps = 1e-7;

enum class LossMode { Vanilla, Hns };

struct LossWeights {
    double alpha = 0.0;  // fraction of positive pixels
    double beta = 0.0;   // fraction of negative pixels
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

inline LossWeights class_balance_weights(const BinaryMask& gt) {
    if (gt.size() == 0) throw InvalidInput("class_balance_weights: empty mask");
    LossWeights w;
    w.positives = gt.count();
    w.negatives = gt.size() - w.positives;
    const auto n = static_cast<double>(gt.size());
    w.alpha = static_cast<double>(w.positives) / n;
    w.beta = static_cast<double>(w.negatives) / n;
    return w;
}

inline double clamp_probability(double p) { return std::clamp(p, edge_eps, 1.0 - edge_eps); }

/// Per-pixel summand of the loss (before the 1/N factor), already negated.
inline double hns_pixel_cost(double p, bool positive, const LossWeights& w, double lambda, LossMode mode) {
    p = clamp_probability(p);
    if (positive) return -w.beta * std::log(p);
    const double log_neg = std::log1p(-p);
    double cost = -lambda * w.alpha * log_neg;
    if (mode == LossMode::Hns) cost -= w.alpha * p * log_neg;
    return cost;
}

/// Derivative of hns_pixel_cost with respect to p (before the 1/N factor).
inline double hns_pixel_gradient(double p, bool positive, const LossWeights& w, double lambda, LossMode mode) {
    p = clamp_probability(p);
    if (positive) return -w.beta / p;
    double g = lambda * w.alpha / (1.0 - p);
    if (mode == LossMode::Hns) g += w.alpha * (-std::log1p(-p) + p / (1.0 - p));
    return g;
}

/// Summed in row-major order so the result does not depend on scheduling.
inline double hns_loss(const RealGrid& pred, const BinaryMask& gt, double lambda = 1.0,
                       LossMode mode = LossMode::Hns) {
    require_same_shape(pred, gt);
    const auto w = class_balance_weights(gt);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += hns_pixel_cost(pred[i], gt[i], w, lambda, mode);
    return sum / static_cast<double>(pred.size());
}

/// dL/dP for every pixel.
inline RealGrid hns_gradient(const RealGrid& pred, const BinaryMask& gt, double lambda = 1.0,
                             LossMode mode = LossMode::Hns) {
    require_same_shape(pred, gt);
    const auto w = class_balance_weights(gt);
    const auto n = static_cast<double>(pred.size());
    RealGrid out(pred.rows(), pred.cols());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = hns_pixel_gradient(pred[i], gt[i], w, lambda, mode) / n;
    return out;
}

/// Per-pixel logistic regression sigmoid(w . f + b).
struct LinearEdgePredictor {
    std::vector<double> weights;
    double bias = 0.0;

    double predict(const FeatureStack& f, std::size_t pixel) const {
        double z = bias;
        for (std::size_t ch = 0; ch < weights.size(); ++ch) z += weights[ch] * f.at(ch, pixel);
        return 1.0 / (1.0 + std::exp(-z));
    }

    RealGrid predict(const FeatureStack& f) const {
        RealGrid out(f.rows(), f.cols());
        for (std::size_t p = 0; p < f.plane_size(); ++p) out[p] = predict(f, p);
        return out;
    }

    friend bool operator==(const LinearEdgePredictor&, const LinearEdgePredictor&) = default;
};

struct ToyFitOptions {
    std::size_t steps = 500;
    double learning_rate = 1.0;
    double lambda = 1.0;
    LossMode mode = LossMode::Hns;
    /// Probability at or above which a pixel is predicted as edge.
    double decision_threshold = 0.5;
};

struct ToyFitResult {
    LinearEdgePredictor predictor;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    /// Mean score on held-out hard negatives (every held-out negative when no
    /// hard-negative mask is supplied).
    double mean_hard_negative = 0.0;
};

namespace detail {

// Pixels with an even row + col train; the rest are held out.
inline bool is_training_pixel(std::size_t pixel, std::size_t cols) { return (pixel / cols + pixel % cols) % 2 == 0; }

}  // namespace detail

/// Full-batch gradient descent of the loss over a per-pixel linear-logistic
/// predictor, trained on a checkerboard half of the pixels and scored on the
/// other half.
inline ToyFitResult toy_fit(const FeatureStack& features, const BinaryMask& edges, const ToyFitOptions& opts = {},
                            const std::optional<BinaryMask>& hard_negatives = std::nullopt) {
    if (features.rows() != edges.rows() || features.cols() != edges.cols())
        throw DimensionError(features.rows(), features.cols(), edges.rows(), edges.cols());
    if (hard_negatives) require_same_shape(*hard_negatives, edges);

    const std::size_t plane = features.plane_size(), cols = features.cols(), channels = features.channels();
    std::vector<std::size_t> train;
    std::size_t train_pos = 0;
    for (std::size_t p = 0; p < plane; ++p)
        if (detail::is_training_pixel(p, cols)) {
            train.push_back(p);
            train_pos += edges[p] ? 1 : 0;
        }
    if (train.empty()) throw InvalidInput("toy_fit: no training pixels");

    LossWeights w;
    w.positives = train_pos;
    w.negatives = train.size() - train_pos;
    w.alpha = static_cast<double>(w.positives) / static_cast<double>(train.size());
    w.beta = static_cast<double>(w.negatives) / static_cast<double>(train.size());
    const auto n = static_cast<double>(train.size());

    ToyFitResult result;
    result.predictor.weights.assign(channels, 0.0);
    auto loss_of = [&](const LinearEdgePredictor& model) {
        double sum = 0.0;
        for (auto p : train) sum += hns_pixel_cost(model.predict(features, p), edges[p], w, opts.lambda, opts.mode);
        return sum / n;
    };

    result.initial_loss = loss_of(result.predictor);
    std::vector<double> grad_w(channels);
    for (std::size_t step = 0; step < opts.steps; ++step) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        for (auto p : train) {
            const double prob = result.predictor.predict(features, p);
            // Chain rule through the sigmoid; zero where the clamp is active.
            const bool clamped = prob <= edge_eps || prob >= 1.0 - edge_eps;
            const double dz = clamped ? 0.0
                                      : hns_pixel_gradient(prob, edges[p], w, opts.lambda, opts.mode) * prob *
                                            (1.0 - prob) / n;
            for (std::size_t ch = 0; ch < channels; ++ch) grad_w[ch] += dz * features.at(ch, p);
            grad_b += dz;
        }
        for (std::size_t ch = 0; ch < channels; ++ch) result.predictor.weights[ch] -= opts.learning_rate * grad_w[ch];
        result.predictor.bias -= opts.learning_rate * grad_b;

        const double loss = loss_of(result.predictor);
        if (!std::isfinite(loss) || loss > 10.0 * result.initial_loss)
            throw DivergenceError(step, loss, result.initial_loss);
    }
    result.final_loss = loss_of(result.predictor);

    std::size_t tp = 0, fp = 0, fn = 0, hard = 0;
    double hard_sum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
        if (detail::is_training_pixel(p, cols)) continue;
        const double prob = result.predictor.predict(features, p);
        const bool predicted = prob >= opts.decision_threshold;
        if (edges[p]) {
            tp += predicted ? 1 : 0;
            fn += predicted ? 0 : 1;
        } else {
            fp += predicted ? 1 : 0;
            if (!hard_negatives || (*hard_negatives)[p]) {
                hard_sum += prob;
                ++hard;
            }
        }
    }
    result.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    result.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    result.mean_hard_negative = hard == 0 ? 0.0 : hard_sum / static_cast<double>(hard);
    return result;
}

}  // namespace locmap
