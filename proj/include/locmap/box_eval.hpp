#pragma once

// Indirect box-based localization metric: threshold the map relative to its
// maximum, box the largest connected foreground area and score that box
// against the ground-truth boxes.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap {

enum class Connectivity { Four = 4, Eight = 8 };

inline constexpr double default_box_threshold = 0.2;

struct ComponentLabeling {
    Grid<std::int32_t> labels;       // 0 = background, components 1..n
    std::vector<std::size_t> sizes;  // sizes[i] belongs to label i + 1

    std::size_t count() const noexcept { return sizes.size(); }
};

/// Labels are assigned in order of each component's first row-major pixel.
inline ComponentLabeling connected_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight) {
    const auto rows = static_cast<std::ptrdiff_t>(mask.rows()), cols = static_cast<std::ptrdiff_t>(mask.cols());
    ComponentLabeling out{Grid<std::int32_t>(mask.rows(), mask.cols(), 0), {}};
    const int reach = conn == Connectivity::Eight ? 1 : 0;

    std::vector<std::ptrdiff_t> stack;
    for (std::ptrdiff_t r0 = 0; r0 < rows; ++r0)
        for (std::ptrdiff_t c0 = 0; c0 < cols; ++c0) {
            const auto idx0 = static_cast<std::size_t>(r0 * cols + c0);
            if (!mask[idx0] || out.labels[idx0] != 0) continue;
            const auto label = static_cast<std::int32_t>(out.sizes.size() + 1);
            std::size_t size = 0;
            out.labels[idx0] = label;
            stack.assign(1, r0 * cols + c0);
            while (!stack.empty()) {
                const auto cur = stack.back();
                stack.pop_back();
                ++size;
                const auto r = cur / cols, c = cur % cols;
                for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
                    for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
                        if ((dr == 0 && dc == 0) || (dr != 0 && dc != 0 && !reach)) continue;
                        const auto nr = r + dr, nc = c + dc;
                        if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
                        const auto n = static_cast<std::size_t>(nr * cols + nc);
                        if (mask[n] && out.labels[n] == 0) {
                            out.labels[n] = label;
                            stack.push_back(nr * cols + nc);
                        }
                    }
            }
            out.sizes.push_back(size);
        }
    return out;
}

/// Tight box around every pixel carrying `label`.
inline BBox component_box(const ComponentLabeling& lab, std::int32_t label) {
    BBox box{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(), -1, -1};
    for (std::size_t r = 0; r < lab.labels.rows(); ++r)
        for (std::size_t c = 0; c < lab.labels.cols(); ++c)
            if (lab.labels(r, c) == label) {
                box.x0 = std::min<std::int64_t>(box.x0, static_cast<std::int64_t>(c));
                box.y0 = std::min<std::int64_t>(box.y0, static_cast<std::int64_t>(r));
                box.x1 = std::max<std::int64_t>(box.x1, static_cast<std::int64_t>(c));
                box.y1 = std::max<std::int64_t>(box.y1, static_cast<std::int64_t>(r));
            }
    return box;
}

/// Box of the largest component of {v >= box_threshold * max}. Among equally
/// large components the one found first in row-major order wins. No box when
/// the map is all zero.
inline std::optional<BBox> infer_box(const ScoreMap& map, double box_threshold = default_box_threshold,
                                     Connectivity conn = Connectivity::Eight) {
    if (!(box_threshold > 0.0 && box_threshold < 1.0)) throw InvalidInput("box threshold must be in (0, 1)");
    double peak = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) peak = std::max(peak, map[i]);
    if (peak <= 0.0) return std::nullopt;

    const double cut = box_threshold * peak;
    BinaryMask fg(map.rows(), map.cols());
    for (std::size_t i = 0; i < map.size(); ++i) fg.set(i, map[i] >= cut);
    const auto lab = connected_components(fg, conn);
    if (lab.count() == 0) return std::nullopt;
    const auto largest = std::max_element(lab.sizes.begin(), lab.sizes.end()) - lab.sizes.begin();
    return component_box(lab, static_cast<std::int32_t>(largest + 1));
}

/// IoU under the inclusive-pixel area convention.
inline double box_iou(const BBox& a, const BBox& b) {
    const BBox inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
    if (!inter.valid()) return 0.0;
    const auto i = inter.area();
    return static_cast<double>(i) / static_cast<double>(a.area() + b.area() - i);
}

enum class AccuracyMode { Top1, GtKnown };

/// What the accuracy computation needs from one image.
struct BoxSample {
    std::string id;
    std::optional<BBox> predicted;
    std::vector<BBox> gt_boxes;
    int gt_label = 0;
    std::optional<int> pred_label;
};

/// Whether one image counts as correctly localized.
inline bool localized(const BoxSample& s, AccuracyMode mode, double iou_min = 0.5) {
    if (mode == AccuracyMode::Top1 && (!s.pred_label || *s.pred_label != s.gt_label)) return false;
    if (!s.predicted) return false;
    double best = 0.0;
    for (const auto& gt : s.gt_boxes) best = std::max(best, box_iou(*s.predicted, gt));
    return best >= iou_min;
}

/// Fraction of images localized correctly.
inline double localization_accuracy(std::span<const BoxSample> samples, AccuracyMode mode, double iou_min = 0.5) {
    if (samples.empty()) throw EmptyDataset();
    if (mode == AccuracyMode::Top1)
        for (const auto& s : samples)
            if (!s.pred_label) throw MissingPrediction(s.id);
    std::size_t hits = 0;
    for (const auto& s : samples) hits += localized(s, mode, iou_min) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace locmap
