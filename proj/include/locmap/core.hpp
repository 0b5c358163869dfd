#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "locmap/errors.hpp"
#include "locmap/grid.hpp"

namespace locmap {

/// Localization map with every value finite and inside [0, 1].
class ScoreMap {
public:
    ScoreMap() = default;
    explicit ScoreMap(RealGrid grid) : grid_(std::move(grid)) {
        if (grid_.rows() == 0 || grid_.cols() == 0) throw InvalidInput("score map must be at least 1x1");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double v = grid_[i];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw InvalidInput("score map value " + std::to_string(v) + " at index " + std::to_string(i) +
                                   " outside [0, 1]");
        }
    }
    ScoreMap(std::size_t rows, std::size_t cols, std::vector<double> values)
        : ScoreMap(RealGrid(rows, cols, std::move(values))) {}

    std::size_t rows() const noexcept { return grid_.rows(); }
    std::size_t cols() const noexcept { return grid_.cols(); }
    std::size_t size() const noexcept { return grid_.size(); }
    double operator()(std::size_t r, std::size_t c) const { return grid_(r, c); }
    double operator[](std::size_t i) const { return grid_[i]; }
    const RealGrid& grid() const noexcept { return grid_; }

    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

private:
    RealGrid grid_;
};

/// 8-bit localization map, values in {0, ..., 255}.
using QuantizedMap = Grid<std::uint8_t>;

/// Foreground/background mask with values in {0, 1}.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(std::size_t rows, std::size_t cols) : grid_(rows, cols, 0) {}
    explicit BinaryMask(Grid<std::uint8_t> grid) : grid_(std::move(grid)) {
        for (std::size_t i = 0; i < grid_.size(); ++i)
            if (grid_[i] > 1) throw InvalidInput("binary mask value " + std::to_string(grid_[i]) + " at index " +
                                                 std::to_string(i));
    }
    BinaryMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> values)
        : BinaryMask(Grid<std::uint8_t>(rows, cols, std::move(values))) {}

    std::size_t rows() const noexcept { return grid_.rows(); }
    std::size_t cols() const noexcept { return grid_.cols(); }
    std::size_t size() const noexcept { return grid_.size(); }
    bool operator()(std::size_t r, std::size_t c) const { return grid_(r, c) != 0; }
    bool operator[](std::size_t i) const { return grid_[i] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { grid_(r, c) = v ? 1 : 0; }
    void set(std::size_t i, bool v) { grid_[i] = v ? 1 : 0; }
    const Grid<std::uint8_t>& grid() const noexcept { return grid_; }

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto v : grid_.values()) n += v;
        return n;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Grid<std::uint8_t> grid_;
};

/// C x H x W feature tensor, channel-major.
class FeatureStack {
public:
    FeatureStack() = default;
    FeatureStack(std::size_t channels, std::size_t rows, std::size_t cols, std::vector<double> values)
        : channels_(channels), rows_(rows), cols_(cols), data_(std::move(values)) {
        if (channels_ == 0 || rows_ == 0 || cols_ == 0) throw InvalidInput("feature stack needs C, H, W >= 1");
        if (data_.size() != channels_ * rows_ * cols_) throw InvalidInput("feature stack value count mismatch");
        for (double v : data_)
            if (!std::isfinite(v)) throw InvalidInput("feature stack contains a non-finite value");
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t plane_size() const noexcept { return rows_ * cols_; }

    double operator()(std::size_t ch, std::size_t r, std::size_t c) const {
        return data_[(ch * rows_ + r) * cols_ + c];
    }
    /// Element `ch` of the feature vector at flat pixel index `pixel`.
    double at(std::size_t ch, std::size_t pixel) const { return data_[ch * rows_ * cols_ + pixel]; }
    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t channels_ = 0, rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Interleaved 8-bit RGB image.
struct RgbImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;  // rows * cols * 3

    std::array<std::uint8_t, 3> operator()(std::size_t r, std::size_t c) const {
        const std::size_t i = (r * cols + c) * 3;
        return {data[i], data[i + 1], data[i + 2]};
    }
    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Axis-aligned box in inclusive, 0-indexed pixel coordinates.
struct BBox {
    std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    std::int64_t width() const noexcept { return x1 - x0 + 1; }
    std::int64_t height() const noexcept { return y1 - y0 + 1; }
    std::int64_t area() const noexcept { return width() * height(); }
    bool valid() const noexcept { return x0 <= x1 && y0 <= y1; }
    bool inside(std::size_t rows, std::size_t cols) const noexcept {
        return valid() && x0 >= 0 && y0 >= 0 && x1 < static_cast<std::int64_t>(cols) &&
               y1 < static_cast<std::int64_t>(rows);
    }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Luma 0.299 R + 0.587 G + 0.114 B, in [0, 255].
inline RealGrid to_gray(const RgbImage& rgb) {
    RealGrid out(rgb.rows, rgb.cols);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
    return out;
}

/// Min-max rescale to [0, 1]. A constant input maps to all zeros.
inline ScoreMap normalize_map(const RealGrid& raw) {
    if (raw.empty()) throw InvalidInput("normalize_map: empty grid");
    double lo = raw[0], hi = raw[0];
    for (double v : raw.values()) {
        if (!std::isfinite(v)) throw InvalidInput("normalize_map: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    RealGrid out(raw.rows(), raw.cols(), 0.0);
    const double range = hi - lo;
    if (range > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / range;
    }
    return ScoreMap(std::move(out));
}

/// round(v * 255) with halves rounded up.
inline QuantizedMap quantize_map(const ScoreMap& map) {
    QuantizedMap out(map.rows(), map.cols());
    for (std::size_t i = 0; i < map.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::floor(map[i] * 255.0 + 0.5));
    return out;
}

namespace detail {

struct Tap {
    std::size_t lo, hi;
    double frac;
};

// Half-pixel centres: src = (dst + 0.5) * in / out - 0.5, clamped to the edge.
inline std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t x = 0; x < out; ++x) {
        double src = (static_cast<double>(x) + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto lo = static_cast<std::size_t>(std::floor(src));
        const std::size_t hi = std::min(lo + 1, in - 1);
        taps[x] = {lo, hi, src - static_cast<double>(lo)};
    }
    return taps;
}

inline double lerp_bounded(double a, double b, double t) {
    if (t == 0.0) return a;
    const double v = a + t * (b - a);
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace detail

/// Bilinear resampling of an arbitrary real grid.
inline RealGrid resize_bilinear(const RealGrid& in, std::size_t out_rows, std::size_t out_cols) {
    if (out_rows == 0 || out_cols == 0) throw InvalidInput("resize_bilinear: zero target size");
    if (in.empty()) throw InvalidInput("resize_bilinear: empty input");
    if (out_rows == in.rows() && out_cols == in.cols()) return in;

    const auto row_taps = detail::bilinear_taps(in.rows(), out_rows);
    const auto col_taps = detail::bilinear_taps(in.cols(), out_cols);
    RealGrid out(out_rows, out_cols);
    for (std::size_t y = 0; y < out_rows; ++y) {
        const auto& ry = row_taps[y];
        for (std::size_t x = 0; x < out_cols; ++x) {
            const auto& cx = col_taps[x];
            const double top = detail::lerp_bounded(in(ry.lo, cx.lo), in(ry.lo, cx.hi), cx.frac);
            const double bottom = detail::lerp_bounded(in(ry.hi, cx.lo), in(ry.hi, cx.hi), cx.frac);
            out(y, x) = detail::lerp_bounded(top, bottom, ry.frac);
        }
    }
    return out;
}

inline ScoreMap resize_bilinear(const ScoreMap& map, std::size_t out_rows, std::size_t out_cols) {
    return ScoreMap(resize_bilinear(map.grid(), out_rows, out_cols));
}

}  // namespace locmap
