#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"
#include "locmap/filters.hpp"
#include "locmap/parallel.hpp"

namespace locmap {

inline constexpr double default_match_tolerance = 0.0075;
inline constexpr double nms_smoothing_sigma = 1.0;

/// Orientation-aware thinning of a soft edge map. The edge normal is the
/// eigenvector of the most negative curvature of the smoothed map's Hessian.
/// A pixel is suppressed when a neighbour one step along the normal
/// (bilinearly sampled) scores higher; on exact ties the smoothed map decides,
/// keeping only the centre of a plateau. Survivors keep their original score.
inline RealGrid nms_thin(const RealGrid& edges) {
    const std::size_t rows = edges.rows(), cols = edges.cols();
    RealGrid out(rows, cols, 0.0);
    if (edges.empty()) return out;

    const auto smooth = gaussian_blur(edges, nms_smoothing_sigma);
    const auto first = central_gradients(smooth);
    const auto second_x = central_gradients(first.dx);
    const auto second_y = central_gradients(first.dy);
    constexpr double tie = 1e-12;

    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = edges(r, c);
            if (e <= 0.0) continue;
            const double hxx = second_x.dx(r, c), hyy = second_y.dy(r, c);
            const double hxy = 0.5 * (second_x.dy(r, c) + second_y.dx(r, c));
            // Major-axis angle of [[hxx, hxy], [hxy, hyy]] belongs to the larger
            // eigenvalue; the ridge normal is perpendicular to it.
            const double theta = 0.5 * std::atan2(2.0 * hxy, hxx - hyy) + std::numbers::pi / 2.0;
            const double nx = std::cos(theta), ny = std::sin(theta);
            const auto rf = static_cast<double>(r), cf = static_cast<double>(c);

            const double e0 = sample_bilinear(edges, rf - ny, cf - nx);
            const double e1 = sample_bilinear(edges, rf + ny, cf + nx);
            if (e < e0 - tie || e < e1 - tie) continue;
            if (std::abs(e - e0) <= tie || std::abs(e - e1) <= tie) {
                const double s = smooth(r, c);
                const double s0 = sample_bilinear(smooth, rf - ny, cf - nx);
                const double s1 = sample_bilinear(smooth, rf + ny, cf + nx);
                const bool keep0 = std::abs(e - e0) > tie || s > s0 + tie;
                const bool keep1 = std::abs(e - e1) > tie || s >= s1 - tie;
                if (!(keep0 && keep1)) continue;
            }
            out(r, c) = e;
        }
    return out;
}

struct MatchCounts {
    std::size_t matched_pred = 0;
    std::size_t total_pred = 0;
    std::size_t matched_gt = 0;
    std::size_t total_gt = 0;

    MatchCounts& operator+=(const MatchCounts& o) noexcept {
        matched_pred += o.matched_pred, total_pred += o.total_pred;
        matched_gt += o.matched_gt, total_gt += o.total_gt;
        return *this;
    }
    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Match radius in pixels: tol_frac times the image diagonal.
inline double match_radius(std::size_t rows, std::size_t cols, double tol_frac) {
    return tol_frac * std::hypot(static_cast<double>(rows), static_cast<double>(cols));
}

/// One-to-one correspondence between predicted and true edge pixels within
/// the match radius. Candidate pairs are taken nearest first; equal distances
/// go to the lower row-major prediction index, then the lower truth index.
inline MatchCounts match_edges(const BinaryMask& pred, const BinaryMask& gt, double tol_frac = default_match_tolerance) {
    require_same_shape(pred, gt);
    const std::size_t rows = pred.rows(), cols = pred.cols();
    const double radius = match_radius(rows, cols, tol_frac);
    const double radius2 = radius * radius;
    const auto reach = static_cast<std::ptrdiff_t>(std::floor(radius));

    struct Candidate {
        std::int64_t dist2;
        std::size_t pred, gt;
    };
    std::vector<Candidate> candidates;
    MatchCounts counts;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        counts.total_gt += gt[p] ? 1 : 0;
        if (!pred[p]) continue;
        ++counts.total_pred;
        const auto r = static_cast<std::ptrdiff_t>(p / cols), c = static_cast<std::ptrdiff_t>(p % cols);
        for (std::ptrdiff_t dr = -reach; dr <= reach; ++dr)
            for (std::ptrdiff_t dc = -reach; dc <= reach; ++dc) {
                const auto d2 = static_cast<std::int64_t>(dr * dr + dc * dc);
                if (static_cast<double>(d2) > radius2) continue;
                const auto nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(rows) ||
                    nc >= static_cast<std::ptrdiff_t>(cols))
                    continue;
                const auto g = static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc);
                if (gt[g]) candidates.push_back({d2, p, g});
            }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist2, a.pred, a.gt) < std::tie(b.dist2, b.pred, b.gt);
    });
    std::vector<bool> pred_used(pred.size(), false), gt_used(pred.size(), false);
    for (const auto& cand : candidates) {
        if (pred_used[cand.pred] || gt_used[cand.gt]) continue;
        pred_used[cand.pred] = gt_used[cand.gt] = true;
        ++counts.matched_pred;
        ++counts.matched_gt;
    }
    return counts;
}

struct PrfPoint {
    double precision = 0.0, recall = 0.0, f = 0.0;
};

inline PrfPoint prf(const MatchCounts& m) {
    PrfPoint out;
    out.precision = m.total_pred == 0 ? 0.0 : static_cast<double>(m.matched_pred) / static_cast<double>(m.total_pred);
    out.recall = m.total_gt == 0 ? 0.0 : static_cast<double>(m.matched_gt) / static_cast<double>(m.total_gt);
    const double s = out.precision + out.recall;
    out.f = s == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / s;
    return out;
}

struct EdgeSample {
    RealGrid pred;   // soft edge map in [0, 1]
    BinaryMask gt;   // true boundary pixels
};

struct EdgeBenchResult {
    std::vector<double> thresholds;
    std::vector<double> precision, recall, f;
    double ods = 0.0;
    double ods_threshold = 0.0;
    double ois = 0.0;
    double ap = 0.0;
};

/// `count` thresholds evenly spaced strictly inside (0, 1).
inline std::vector<double> edge_thresholds(std::size_t count = 99) {
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i)
        t[i] = static_cast<double>(i + 1) / static_cast<double>(count + 1);
    return t;
}

/// Per-image counts at every threshold, predictions thinned first.
inline std::vector<MatchCounts> edge_image_counts(const EdgeSample& s, std::span<const double> thresholds,
                                                  double tol_frac) {
    require_same_shape(s.pred, s.gt);
    const auto thin = nms_thin(s.pred);
    std::vector<MatchCounts> out;
    out.reserve(thresholds.size());
    BinaryMask bin(thin.rows(), thin.cols());
    for (double t : thresholds) {
        for (std::size_t i = 0; i < thin.size(); ++i) bin.set(i, thin[i] >= t);
        out.push_back(match_edges(bin, s.gt, tol_frac));
    }
    return out;
}

/// ODS: best F of dataset-summed counts at one shared threshold. OIS: mean over
/// images of each image's best F. AP: step-integrated area under the dataset
/// precision-recall sequence, highest threshold first.
inline EdgeBenchResult edge_benchmark(std::span<const EdgeSample> samples, double tol_frac = default_match_tolerance,
                                      std::vector<double> thresholds = edge_thresholds(), unsigned jobs = 1) {
    if (samples.empty()) throw EmptyDataset();
    std::vector<std::vector<MatchCounts>> per_image(samples.size());
    parallel_for(samples.size(), jobs,
                 [&](std::size_t i) { per_image[i] = edge_image_counts(samples[i], thresholds, tol_frac); });

    EdgeBenchResult res;
    const std::size_t nt = thresholds.size();
    res.thresholds = thresholds;
    res.precision.resize(nt);
    res.recall.resize(nt);
    res.f.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        MatchCounts sum;
        for (const auto& img : per_image) sum += img[t];
        const auto p = prf(sum);
        res.precision[t] = p.precision;
        res.recall[t] = p.recall;
        res.f[t] = p.f;
        if (p.f > res.ods) {
            res.ods = p.f;
            res.ods_threshold = thresholds[t];
        }
    }

    std::vector<double> best(per_image.size(), 0.0);
    for (std::size_t i = 0; i < per_image.size(); ++i)
        for (const auto& m : per_image[i]) best[i] = std::max(best[i], prf(m).f);
    std::sort(best.begin(), best.end());
    double sum = 0.0;
    for (double b : best) sum += b;
    res.ois = sum / static_cast<double>(best.size());

    double prev_recall = 0.0;
    for (std::size_t k = nt; k-- > 0;) {
        res.ap += std::max(0.0, res.recall[k] - prev_recall) * res.precision[k];
        prev_recall = std::max(prev_recall, res.recall[k]);
    }
    res.ap = std::clamp(res.ap, 0.0, 1.0);
    return res;
}

}  // namespace locmap
