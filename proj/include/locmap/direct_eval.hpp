#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap {

inline constexpr int threshold_count = 256;

/// Foreground iff value >= t. At t = 0 every pixel is foreground.
inline BinaryMask binarize(const QuantizedMap& map, int t) {
    if (t < 0 || t > 255) throw InvalidInput("binarize: threshold " + std::to_string(t) + " outside [0, 255]");
    Grid<std::uint8_t> out(map.rows(), map.cols());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] >= t ? 1 : 0;
    return BinaryMask(std::move(out));
}

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    /// tp / (tp + fp + fn), 0 when the union is empty.
    double iou() const noexcept {
        const auto uni = tp + fp + fn;
        return uni == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(uni);
    }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp, fp += o.fp, fn += o.fn, tn += o.tn;
        return *this;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt);
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i], g = gt[i];
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// Confusion counts of one image at every threshold 0..255.
struct ImageCurve {
    std::array<ConfusionCounts, threshold_count> counts{};

    double iou(int t) const { return counts[static_cast<std::size_t>(t)].iou(); }
    std::array<double, threshold_count> ious() const {
        std::array<double, threshold_count> out{};
        for (int t = 0; t < threshold_count; ++t) out[static_cast<std::size_t>(t)] = iou(t);
        return out;
    }
};

/// Per-threshold counts from a value histogram split by ground truth, so the
/// whole sweep costs one pass over the pixels.
inline ImageCurve iou_threshold_curve(const QuantizedMap& map, const BinaryMask& gt) {
    require_same_shape(map, gt);
    std::array<std::uint64_t, threshold_count> fg{}, bg{};
    for (std::size_t i = 0; i < map.size(); ++i) (gt[i] ? fg : bg)[map[i]]++;

    std::uint64_t gt_total = 0, bg_total = 0;
    for (std::size_t v = 0; v < fg.size(); ++v) {
        gt_total += fg[v];
        bg_total += bg[v];
    }

    ImageCurve curve;
    std::uint64_t tp = 0, fp = 0;
    for (int t = threshold_count - 1; t >= 0; --t) {
        tp += fg[static_cast<std::size_t>(t)];
        fp += bg[static_cast<std::size_t>(t)];
        curve.counts[static_cast<std::size_t>(t)] = {tp, fp, gt_total - tp, bg_total - fp};
    }
    return curve;
}

enum class IouAveraging {
    Macro,  // mean of per-image IoU
    Micro,  // IoU of dataset-summed counts
};

struct EvalCurve {
    std::array<double, threshold_count> mean_iou{};
    std::array<double, threshold_count> precision{};
    std::array<double, threshold_count> recall{};
    double peak_iou = 0.0;
    int peak_t = 0;
    double ap = 0.0;
};

/// Step-integrated area under the precision-recall sequence, thresholds
/// traversed from 255 down to 0: sum of (R_t - R_{t+1}) * P_t with R_256 = 0.
inline double average_precision(const EvalCurve& curve) {
    double ap = 0.0, prev_recall = 0.0;
    for (int t = threshold_count - 1; t >= 0; --t) {
        const auto i = static_cast<std::size_t>(t);
        ap += (curve.recall[i] - prev_recall) * curve.precision[i];
        prev_recall = curve.recall[i];
    }
    return std::clamp(ap, 0.0, 1.0);
}

/// Dataset-level curve. Precision and recall always use summed counts;
/// precision is 1 where nothing is predicted and recall 0 where nothing is true.
inline EvalCurve dataset_curve(std::span<const ImageCurve> images, IouAveraging averaging = IouAveraging::Macro) {
    if (images.empty()) throw EmptyDataset();
    EvalCurve out;
    std::vector<double> ious;
    ious.reserve(images.size());
    for (int t = 0; t < threshold_count; ++t) {
        const auto i = static_cast<std::size_t>(t);
        ConfusionCounts sum;
        ious.clear();
        for (const auto& img : images) {
            sum += img.counts[i];
            ious.push_back(img.counts[i].iou());
        }
        // Summing in sorted order makes the mean independent of image order.
        std::sort(ious.begin(), ious.end());
        double iou_sum = 0.0;
        for (double v : ious) iou_sum += v;
        out.mean_iou[i] =
            averaging == IouAveraging::Macro ? iou_sum / static_cast<double>(images.size()) : sum.iou();
        const auto predicted = sum.tp + sum.fp, actual = sum.tp + sum.fn;
        out.precision[i] = predicted == 0 ? 1.0 : static_cast<double>(sum.tp) / static_cast<double>(predicted);
        out.recall[i] = actual == 0 ? 0.0 : static_cast<double>(sum.tp) / static_cast<double>(actual);
    }
    const auto best = std::max_element(out.mean_iou.begin(), out.mean_iou.end());
    out.peak_iou = *best;
    out.peak_t = static_cast<int>(best - out.mean_iou.begin());
    out.ap = average_precision(out);
    return out;
}

}  // namespace locmap
