#pragma once

// Self-enhancement of a first-stage localization map: the top-K pixels of the
// first-stage map act as seeds, every pixel is scored by its cosine similarity
// to each seed's feature vector, and the pointwise maximum over seeds is
// renormalized to [0, 1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap {

/// Seed count used when none is given.
inline constexpr std::size_t default_seed_count = 60;

struct SeedSet {
    std::vector<Pixel> positions;
    std::vector<double> scores;  // non-increasing

    std::size_t size() const noexcept { return positions.size(); }
};

/// K similarity maps, each H x W with values in [-1, 1].
struct SimilarityStack {
    std::vector<RealGrid> maps;
};

struct SemOptions {
    /// Replace negative similarities by 0 before aggregation.
    bool clamp_negative = false;
};

/// The k highest-scoring pixels. Ties go to the earlier row-major position.
inline SeedSet select_seeds(const ScoreMap& map, std::size_t k) {
    const std::size_t n = map.size();
    if (k < 1 || k > n) throw InvalidK(k, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return map[a] > map[b] || (map[a] == map[b] && a < b); });

    SeedSet seeds;
    seeds.positions.reserve(k);
    seeds.scores.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        seeds.positions.push_back({order[i] / map.cols(), order[i] % map.cols()});
        seeds.scores.push_back(map[order[i]]);
    }
    return seeds;
}

namespace detail {

inline std::vector<double> pixel_norms(const FeatureStack& f) {
    std::vector<double> norms(f.plane_size(), 0.0);
    for (std::size_t ch = 0; ch < f.channels(); ++ch)
        for (std::size_t p = 0; p < norms.size(); ++p) norms[p] += f.at(ch, p) * f.at(ch, p);
    for (auto& n : norms) n = std::sqrt(n);
    return norms;
}

}  // namespace detail

/// Cosine similarity of every pixel's feature vector to each seed's vector.
/// A zero-norm vector on either side yields 0.
inline SimilarityStack similarity_maps(const FeatureStack& features, const SeedSet& seeds) {
    const std::size_t rows = features.rows(), cols = features.cols(), plane = features.plane_size();
    for (const auto& s : seeds.positions)
        if (s.row >= rows || s.col >= cols) throw InvalidInput("seed outside the feature grid");

    const auto norms = detail::pixel_norms(features);
    SimilarityStack out;
    out.maps.reserve(seeds.size());
    std::vector<double> dot(plane);
    for (const auto& s : seeds.positions) {
        const std::size_t seed = s.row * cols + s.col;
        std::fill(dot.begin(), dot.end(), 0.0);
        for (std::size_t ch = 0; ch < features.channels(); ++ch) {
            const double sv = features.at(ch, seed);
            for (std::size_t p = 0; p < plane; ++p) dot[p] += sv * features.at(ch, p);
        }
        RealGrid sim(rows, cols, 0.0);
        const double seed_norm = norms[seed];
        for (std::size_t p = 0; p < plane; ++p) {
            const double denom = seed_norm * norms[p];
            if (denom == 0.0) continue;
            sim[p] = p == seed ? 1.0 : std::clamp(dot[p] / denom, -1.0, 1.0);
        }
        out.maps.push_back(std::move(sim));
    }
    return out;
}

/// Pointwise maximum across the stack.
inline RealGrid aggregate_max(const SimilarityStack& stack) {
    if (stack.maps.empty()) throw InvalidInput("aggregate_max: empty similarity stack");
    RealGrid out = stack.maps.front();
    for (std::size_t k = 1; k < stack.maps.size(); ++k) {
        require_same_shape(out, stack.maps[k]);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], stack.maps[k][i]);
    }
    return out;
}

/// Max-aggregated similarity before renormalization.
inline RealGrid sem_aggregate(const FeatureStack& features, const ScoreMap& first_stage, std::size_t k,
                              const SemOptions& opts = {}) {
    if (features.rows() != first_stage.rows() || features.cols() != first_stage.cols())
        throw DimensionError(features.rows(), features.cols(), first_stage.rows(), first_stage.cols());
    auto agg = aggregate_max(similarity_maps(features, select_seeds(first_stage, k)));
    if (opts.clamp_negative)
        for (auto& v : agg.values()) v = std::max(v, 0.0);
    return agg;
}

inline ScoreMap sem_enhance(const FeatureStack& features, const ScoreMap& first_stage,
                            std::size_t k = default_seed_count, const SemOptions& opts = {}) {
    return normalize_map(sem_aggregate(features, first_stage, k, opts));
}

}  // namespace locmap
