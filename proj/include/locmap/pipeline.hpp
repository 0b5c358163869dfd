#pragma once

// Manifest-level drivers shared by the CLI and the tests. Work is split per
// image; every reduction runs over per-image results in manifest order.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locmap/box_eval.hpp"
#include "locmap/core.hpp"
#include "locmap/direct_eval.hpp"
#include "locmap/errors.hpp"
#include "locmap/filters.hpp"
#include "locmap/manifest.hpp"
#include "locmap/npy.hpp"
#include "locmap/parallel.hpp"
#include "locmap/png.hpp"
#include "locmap/sem.hpp"

namespace locmap {

enum class MapSource { Cam, Sem };

inline const char* source_name(MapSource s) { return s == MapSource::Cam ? "cam" : "sem"; }

struct MapConfig {
    MapSource source = MapSource::Sem;
    std::size_t k = default_seed_count;
    SemOptions sem;
};

/// First-stage map, min-max normalized.
inline ScoreMap load_first_stage(const ImageRecord& rec) { return normalize_map(npy::to_grid(npy::read_array(rec.cam))); }

inline FeatureStack load_features(const ImageRecord& rec) {
    if (!rec.features) throw InvalidInput("image '" + rec.id + "' has no feature stack");
    return npy::to_stack(npy::read_array(*rec.features));
}

inline BinaryMask load_gt_mask(const ImageRecord& rec) {
    auto mask = png::read_mask_png(rec.gt_mask);
    if (mask.rows() != rec.height || mask.cols() != rec.width)
        throw DimensionError("mask of '" + rec.id + "' is " + std::to_string(mask.rows()) + "x" +
                             std::to_string(mask.cols()) + ", manifest says " + std::to_string(rec.height) + "x" +
                             std::to_string(rec.width));
    return mask;
}

/// Requested map at the resolution it is stored in.
inline ScoreMap source_map(const ImageRecord& rec, const MapConfig& cfg) {
    auto cam = load_first_stage(rec);
    if (cfg.source == MapSource::Cam) return cam;
    return sem_enhance(load_features(rec), cam, cfg.k, cfg.sem);
}

/// Upsampled to the image size recorded in the manifest.
inline ScoreMap image_map(const ImageRecord& rec, const MapConfig& cfg) {
    return resize_bilinear(source_map(rec, cfg), rec.height, rec.width);
}

/// IoU-Threshold counts of a map of any resolution against a full-size mask.
inline ImageCurve map_curve(const ScoreMap& map, const BinaryMask& gt) {
    return iou_threshold_curve(quantize_map(resize_bilinear(map, gt.rows(), gt.cols())), gt);
}

inline std::vector<ImageCurve> image_curves(const Manifest& m, const MapConfig& cfg, unsigned jobs = 1) {
    std::vector<ImageCurve> curves(m.images.size());
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        const auto& rec = m.images[i];
        curves[i] = map_curve(source_map(rec, cfg), load_gt_mask(rec));
    });
    return curves;
}

inline EvalCurve evaluate_maps(const Manifest& m, const MapConfig& cfg, IouAveraging averaging = IouAveraging::Macro,
                               unsigned jobs = 1) {
    const auto curves = image_curves(m, cfg, jobs);
    return dataset_curve(curves, averaging);
}

/// Full-resolution maps for every image, in manifest order.
inline std::vector<ScoreMap> image_maps(const Manifest& m, const MapConfig& cfg, unsigned jobs = 1) {
    std::vector<ScoreMap> maps(m.images.size());
    parallel_for(m.images.size(), jobs, [&](std::size_t i) { maps[i] = image_map(m.images[i], cfg); });
    return maps;
}

inline std::vector<BoxSample> box_samples(const Manifest& m, std::span<const ScoreMap> maps, double box_threshold,
                                          Connectivity conn = Connectivity::Eight, unsigned jobs = 1) {
    if (maps.size() != m.images.size()) throw InvalidInput("one map per manifest image expected");
    std::vector<BoxSample> out(m.images.size());
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        const auto& rec = m.images[i];
        out[i] = BoxSample{rec.id, infer_box(maps[i], box_threshold, conn), rec.gt_boxes, rec.gt_label,
                           rec.pred_label};
    });
    return out;
}

struct BoxAccuracy {
    double box_threshold = default_box_threshold;
    std::optional<double> top1;  // absent when some image has no pred_label
    double gtknown = 0.0;
};

inline BoxAccuracy box_accuracy(std::span<const BoxSample> samples, double box_threshold) {
    BoxAccuracy acc;
    acc.box_threshold = box_threshold;
    acc.gtknown = localization_accuracy(samples, AccuracyMode::GtKnown);
    const bool all_labelled =
        std::all_of(samples.begin(), samples.end(), [](const BoxSample& s) { return s.pred_label.has_value(); });
    if (all_labelled) acc.top1 = localization_accuracy(samples, AccuracyMode::Top1);
    return acc;
}

/// Accuracy at each box threshold; maps are computed once.
inline std::vector<BoxAccuracy> box_threshold_sweep(const Manifest& m, const MapConfig& cfg,
                                                    std::span<const double> thresholds,
                                                    Connectivity conn = Connectivity::Eight, unsigned jobs = 1) {
    if (thresholds.empty()) throw InvalidInput("empty box threshold list");
    const auto maps = image_maps(m, cfg, jobs);
    std::vector<BoxAccuracy> rows;
    for (double t : thresholds) rows.push_back(box_accuracy(box_samples(m, maps, t, conn, jobs), t));
    return rows;
}

/// Box thresholds 0.05, 0.10, ..., 0.95.
inline std::vector<double> default_box_sweep() {
    std::vector<double> t;
    for (int i = 1; i <= 19; ++i) t.push_back(static_cast<double>(i) / 20.0);
    return t;
}

struct KSweepRow {
    std::size_t k = 0;
    double gtknown_acc = 0.0;
    double peak_iou = 0.0;
};

/// SEM box accuracy and Peak-IoU for every K. Each image loads its inputs once.
inline std::vector<KSweepRow> k_sweep(const Manifest& m, std::span<const std::size_t> ks,
                                      double box_threshold = default_box_threshold, unsigned jobs = 1) {
    if (ks.empty()) throw InvalidInput("empty K list");
    if (m.images.empty()) throw EmptyDataset();
    const std::size_t n = m.images.size();
    std::vector<std::vector<ImageCurve>> curves(ks.size(), std::vector<ImageCurve>(n));
    std::vector<std::vector<BoxSample>> samples(ks.size(), std::vector<BoxSample>(n));
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& rec = m.images[i];
        const auto cam = load_first_stage(rec);
        const auto features = load_features(rec);
        const auto gt = load_gt_mask(rec);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const auto full = resize_bilinear(sem_enhance(features, cam, ks[j]), rec.height, rec.width);
            curves[j][i] = iou_threshold_curve(quantize_map(full), gt);
            samples[j][i] = BoxSample{rec.id, infer_box(full, box_threshold), rec.gt_boxes, rec.gt_label,
                                      rec.pred_label};
        }
    });
    std::vector<KSweepRow> rows;
    for (std::size_t j = 0; j < ks.size(); ++j)
        rows.push_back({ks[j], localization_accuracy(samples[j], AccuracyMode::GtKnown),
                        dataset_curve(curves[j]).peak_iou});
    return rows;
}

namespace detail {

inline RealGrid scaled_gradient_magnitude(const RealGrid& g) {
    const auto grad = central_gradients(g);
    RealGrid mag(g.rows(), g.cols());
    double peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mag[i] = std::hypot(grad.dx[i], grad.dy[i]);
        peak = std::max(peak, mag[i]);
    }
    if (peak > 0.0)
        for (auto& v : mag.values()) v /= peak;
    return mag;
}

}  // namespace detail

/// Per-pixel inputs of the edge predictor: luma gradient magnitude, the SEM
/// value and the SEM gradient magnitude, gradients scaled to a peak of 1.
inline FeatureStack pixel_edge_features(const RgbImage& rgb, const ScoreMap& sem) {
    if (rgb.rows != sem.rows() || rgb.cols != sem.cols())
        throw DimensionError(rgb.rows, rgb.cols, sem.rows(), sem.cols());
    const std::size_t plane = sem.size();
    const auto luma = detail::scaled_gradient_magnitude(to_gray(rgb));
    const auto sem_grad = detail::scaled_gradient_magnitude(sem.grid());
    std::vector<double> values(3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
        values[p] = luma[p];
        values[plane + p] = sem[p];
        values[2 * plane + p] = sem_grad[p];
    }
    return FeatureStack(3, sem.rows(), sem.cols(), std::move(values));
}

/// Lays every image's pixels side by side in one row.
inline std::pair<FeatureStack, BinaryMask> concat_pixels(std::span<const FeatureStack> stacks,
                                                         std::span<const BinaryMask> masks) {
    if (stacks.empty() || stacks.size() != masks.size()) throw InvalidInput("one mask per feature stack expected");
    const std::size_t channels = stacks.front().channels();
    std::size_t total = 0;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
        if (stacks[i].channels() != channels) throw InvalidInput("feature stacks differ in channel count");
        if (stacks[i].rows() != masks[i].rows() || stacks[i].cols() != masks[i].cols())
            throw DimensionError(stacks[i].rows(), stacks[i].cols(), masks[i].rows(), masks[i].cols());
        total += stacks[i].plane_size();
    }
    std::vector<double> values(channels * total);
    BinaryMask mask(1, total);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
        const std::size_t plane = stacks[i].plane_size();
        for (std::size_t ch = 0; ch < channels; ++ch)
            for (std::size_t p = 0; p < plane; ++p) values[ch * total + offset + p] = stacks[i].at(ch, p);
        for (std::size_t p = 0; p < plane; ++p) mask.set(offset + p, masks[i][p]);
        offset += plane;
    }
    return {FeatureStack(channels, 1, total, std::move(values)), std::move(mask)};
}

}  // namespace locmap
