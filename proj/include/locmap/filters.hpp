#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "locmap/grid.hpp"

namespace locmap {

/// Separable Gaussian blur, kernel radius ceil(3 sigma), borders clamped.
/// sigma <= 0 returns the input unchanged.
inline RealGrid gaussian_blur(const RealGrid& in, double sigma) {
    if (sigma <= 0.0 || in.empty()) return in;
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : kernel) w /= sum;

    const auto rows = static_cast<std::ptrdiff_t>(in.rows()), cols = static_cast<std::ptrdiff_t>(in.cols());
    auto clamp_idx = [](std::ptrdiff_t v, std::ptrdiff_t n) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, n - 1)); };

    RealGrid tmp(in.rows(), in.cols());
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] * in(static_cast<std::size_t>(r), clamp_idx(c + k, cols));
            tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    RealGrid out(in.rows(), in.cols());
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(clamp_idx(r + k, rows), static_cast<std::size_t>(c));
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    return out;
}

/// Central differences with clamped borders: d/dcol and d/drow.
struct Gradients {
    RealGrid dx, dy;
};

inline Gradients central_gradients(const RealGrid& in) {
    const std::size_t rows = in.rows(), cols = in.cols();
    Gradients g{RealGrid(rows, cols), RealGrid(rows, cols)};
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t cl = c == 0 ? 0 : c - 1, cr = std::min(c + 1, cols - 1);
            const std::size_t ru = r == 0 ? 0 : r - 1, rd = std::min(r + 1, rows - 1);
            g.dx(r, c) = (in(r, cr) - in(r, cl)) / 2.0;
            g.dy(r, c) = (in(rd, c) - in(ru, c)) / 2.0;
        }
    return g;
}

/// Bilinear sample at fractional (row, col), clamped to the grid.
inline double sample_bilinear(const RealGrid& g, double r, double c) {
    r = std::clamp(r, 0.0, static_cast<double>(g.rows() - 1));
    c = std::clamp(c, 0.0, static_cast<double>(g.cols() - 1));
    const auto r0 = static_cast<std::size_t>(std::floor(r)), c0 = static_cast<std::size_t>(std::floor(c));
    const std::size_t r1 = std::min(r0 + 1, g.rows() - 1), c1 = std::min(c0 + 1, g.cols() - 1);
    const double fr = r - static_cast<double>(r0), fc = c - static_cast<double>(c0);
    const double top = g(r0, c0) * (1.0 - fc) + g(r0, c1) * fc;
    const double bottom = g(r1, c0) * (1.0 - fc) + g(r1, c1) * fc;
    return top * (1.0 - fr) + bottom * fr;
}

}  // namespace locmap
