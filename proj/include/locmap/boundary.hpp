#pragma once

// Pseudo object-boundary generation. An enhanced localization map is refined
// against the RGB image with windowed mean-field inference, the refined object
// is outlined by its longest outer contour, and that contour is snapped onto
// nearby Canny edges.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "locmap/box_eval.hpp"
#include "locmap/core.hpp"
#include "locmap/errors.hpp"
#include "locmap/filters.hpp"

namespace locmap {

/// Two-label dense CRF restricted to a (2r+1)^2 window. The pairwise kernel is
/// exp(-d^2 / 2 spatial_sigma^2) * exp(-|I_i - I_j|^2 / 2 appearance_sigma^2)
/// with a Potts compatibility scaled by compat_weight.
struct CrfParams {
    std::size_t iterations = 5;
    std::size_t window_radius = 7;
    double spatial_sigma = 3.0;
    double appearance_sigma = 13.0;
    double compat_weight = 1.0;

    void validate() const {
        if (iterations < 1) throw InvalidInput("crf iterations must be >= 1");
        if (window_radius < 1) throw InvalidInput("crf window radius must be >= 1");
        if (!(spatial_sigma > 0.0) || !(appearance_sigma > 0.0)) throw InvalidInput("crf sigmas must be > 0");
    }
};

struct CannyParams {
    double sigma = 1.4;
    double low_frac = 0.1;
    double high_frac = 0.3;
};

/// Ordered 8-connected pixel chain.
struct ContourPath {
    std::vector<Pixel> points;
    bool closed = true;

    std::size_t length() const noexcept { return points.size(); }
};

/// Probabilities are clamped to [unary_floor, 1 - unary_floor] before taking logs.
inline constexpr double unary_floor = 1e-6;

inline ScoreMap crf_refine(const ScoreMap& unary, const RgbImage& rgb, const CrfParams& params = {}) {
    params.validate();
    if (unary.rows() != rgb.rows || unary.cols() != rgb.cols)
        throw DimensionError(unary.rows(), unary.cols(), rgb.rows, rgb.cols);

    const auto rows = static_cast<std::ptrdiff_t>(unary.rows()), cols = static_cast<std::ptrdiff_t>(unary.cols());
    const auto radius = static_cast<std::ptrdiff_t>(params.window_radius);
    const std::size_t n = unary.size();

    // Energy difference E_fg - E_bg of the unary term.
    std::vector<double> unary_diff(n), q(n), next(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(unary[i], unary_floor, 1.0 - unary_floor);
        unary_diff[i] = -std::log(p) + std::log(1.0 - p);
        q[i] = p;
    }

    const double spatial_scale = 1.0 / (2.0 * params.spatial_sigma * params.spatial_sigma);
    const double appearance_scale = 1.0 / (2.0 * params.appearance_sigma * params.appearance_sigma);

    for (std::size_t it = 0; it < params.iterations; ++it) {
        for (std::ptrdiff_t r = 0; r < rows; ++r)
            for (std::ptrdiff_t c = 0; c < cols; ++c) {
                const auto i = static_cast<std::size_t>(r * cols + c);
                const std::uint8_t* pi = rgb.data.data() + 3 * i;
                double msg_fg = 0.0, msg_bg = 0.0;
                for (std::ptrdiff_t dr = -radius; dr <= radius; ++dr) {
                    const auto nr = r + dr;
                    if (nr < 0 || nr >= rows) continue;
                    for (std::ptrdiff_t dc = -radius; dc <= radius; ++dc) {
                        const auto nc = c + dc;
                        if (nc < 0 || nc >= cols || (dr == 0 && dc == 0)) continue;
                        const auto j = static_cast<std::size_t>(nr * cols + nc);
                        const std::uint8_t* pj = rgb.data.data() + 3 * j;
                        double color = 0.0;
                        for (int ch = 0; ch < 3; ++ch) {
                            const double d = static_cast<double>(pi[ch]) - static_cast<double>(pj[ch]);
                            color += d * d;
                        }
                        const auto dist2 = static_cast<double>(dr * dr + dc * dc);
                        const double k = std::exp(-dist2 * spatial_scale - color * appearance_scale);
                        msg_fg += k * q[j];
                        msg_bg += k * (1.0 - q[j]);
                    }
                }
                // Potts: a label pays for neighbours holding the other label.
                const double diff = unary_diff[i] + params.compat_weight * (msg_bg - msg_fg);
                next[i] = 1.0 / (1.0 + std::exp(diff));
            }
        q.swap(next);
    }
    return ScoreMap(RealGrid(unary.rows(), unary.cols(), std::move(q)));
}

/// Canny detector on a grayscale image. Thresholds are fractions of the
/// largest gradient magnitude.
inline BinaryMask canny_edges(const RealGrid& gray, const CannyParams& params = {}) {
    if (!(params.low_frac > 0.0 && params.low_frac < params.high_frac && params.high_frac <= 1.0))
        throw InvalidInput("canny thresholds need 0 < low < high <= 1");
    const std::size_t rows = gray.rows(), cols = gray.cols();
    BinaryMask edges(rows, cols);
    if (gray.empty()) return edges;

    const auto g = central_gradients(gaussian_blur(gray, params.sigma));
    RealGrid mag(rows, cols);
    double peak = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::hypot(g.dx[i], g.dy[i]);
        peak = std::max(peak, mag[i]);
    }
    if (peak <= 0.0) return edges;

    auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
        if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(rows) || c >= static_cast<std::ptrdiff_t>(cols))
            return 0.0;
        return mag(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };

    // Non-maximum suppression across the quantized gradient direction. The
    // strict/non-strict pair keeps exactly one pixel on a symmetric plateau.
    constexpr double tan22 = 0.41421356237309503;
    RealGrid thin(rows, cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double m = mag(r, c);
            if (m <= 0.0) continue;
            const double gx = g.dx(r, c), gy = g.dy(r, c);
            const double ax = std::abs(gx), ay = std::abs(gy);
            std::ptrdiff_t dr, dc;
            if (ay <= tan22 * ax) dr = 0, dc = 1;
            else if (ax <= tan22 * ay) dr = 1, dc = 0;
            else if (gx * gy > 0) dr = 1, dc = 1;
            else dr = 1, dc = -1;
            const auto rr = static_cast<std::ptrdiff_t>(r), cc = static_cast<std::ptrdiff_t>(c);
            if (m > at(rr - dr, cc - dc) && m >= at(rr + dr, cc + dc)) thin(r, c) = m;
        }

    // Hysteresis: grow strong pixels through 8-connected weak ones.
    const double high = params.high_frac * peak, low = params.low_frac * peak;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < thin.size(); ++i)
        if (thin[i] >= high) {
            edges.set(i, true);
            stack.push_back(i);
        }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const auto r = static_cast<std::ptrdiff_t>(i / cols), c = static_cast<std::ptrdiff_t>(i % cols);
        for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
            for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
                const auto nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(rows) ||
                    nc >= static_cast<std::ptrdiff_t>(cols))
                    continue;
                const auto j = static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc);
                if (!edges[j] && thin[j] >= low) {
                    edges.set(j, true);
                    stack.push_back(j);
                }
            }
    }
    return edges;
}

namespace detail {

// Clockwise neighbour order in image coordinates (row grows downwards),
// starting west.
inline constexpr std::array<std::array<int, 2>, 8> moore_dirs{
    {{0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}}};

inline int moore_index(std::ptrdiff_t dr, std::ptrdiff_t dc) {
    for (int d = 0; d < 8; ++d)
        if (moore_dirs[static_cast<std::size_t>(d)][0] == dr && moore_dirs[static_cast<std::size_t>(d)][1] == dc)
            return d;
    return -1;
}

}  // namespace detail

/// Outer boundary of every 8-connected component by Moore-neighbour tracing,
/// clockwise from the component's first row-major pixel. Components are
/// returned in labeling order.
inline std::vector<ContourPath> trace_contours(const BinaryMask& mask) {
    const auto lab = connected_components(mask, Connectivity::Eight);
    const auto rows = static_cast<std::ptrdiff_t>(mask.rows()), cols = static_cast<std::ptrdiff_t>(mask.cols());

    std::vector<Pixel> starts(lab.count());
    std::vector<bool> seen(lab.count(), false);
    for (std::size_t i = 0; i < lab.labels.size(); ++i) {
        const auto l = lab.labels[i];
        if (l > 0 && !seen[static_cast<std::size_t>(l - 1)]) {
            seen[static_cast<std::size_t>(l - 1)] = true;
            starts[static_cast<std::size_t>(l - 1)] = {i / mask.cols(), i % mask.cols()};
        }
    }

    std::vector<ContourPath> out;
    out.reserve(lab.count());
    for (std::size_t k = 0; k < lab.count(); ++k) {
        const auto label = static_cast<std::int32_t>(k + 1);
        auto inside = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
            return r >= 0 && c >= 0 && r < rows && c < cols &&
                   lab.labels(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) == label;
        };
        // From `cur`, scan clockwise starting just after `from_dir`; returns the
        // direction of the first foreground neighbour, or -1.
        auto scan = [&](std::ptrdiff_t r, std::ptrdiff_t c, int from_dir) {
            for (int s = 1; s <= 8; ++s) {
                const int d = (from_dir + s) % 8;
                const auto& m = detail::moore_dirs[static_cast<std::size_t>(d)];
                if (inside(r + m[0], c + m[1])) return d;
            }
            return -1;
        };

        ContourPath path;
        const auto sr = static_cast<std::ptrdiff_t>(starts[k].row), sc = static_cast<std::ptrdiff_t>(starts[k].col);
        path.points.push_back(starts[k]);
        // The start is the first pixel in raster order, so its west neighbour is background.
        int first_dir = scan(sr, sc, 0);
        if (first_dir < 0) {
            out.push_back(std::move(path));
            continue;
        }
        std::ptrdiff_t r = sr, c = sc;
        int dir = first_dir;
        const std::size_t guard = 4 * lab.sizes[k] + 8;
        while (true) {
            const auto& m = detail::moore_dirs[static_cast<std::size_t>(dir)];
            const std::ptrdiff_t nr = r + m[0], nc = c + m[1];
            // The background cell examined just before the hit, seen from the new pixel.
            const auto& prev = detail::moore_dirs[static_cast<std::size_t>((dir + 7) % 8)];
            const int back = detail::moore_index(r + prev[0] - nr, c + prev[1] - nc);
            r = nr;
            c = nc;
            const int next_dir = scan(r, c, back);
            if (r == sr && c == sc && next_dir == first_dir) break;
            path.points.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
            dir = next_dir;
            if (path.points.size() > guard) break;
        }
        out.push_back(std::move(path));
    }
    return out;
}

/// Foreground pixels with a background 4-neighbour. Pixels on the image
/// border only count when a 4-neighbour inside the image is background.
inline BinaryMask mask_boundary(const BinaryMask& mask) {
    BinaryMask out(mask.rows(), mask.cols());
    for (std::size_t r = 0; r < mask.rows(); ++r)
        for (std::size_t c = 0; c < mask.cols(); ++c) {
            if (!mask(r, c)) continue;
            const bool edge = (r > 0 && !mask(r - 1, c)) || (r + 1 < mask.rows() && !mask(r + 1, c)) ||
                              (c > 0 && !mask(r, c - 1)) || (c + 1 < mask.cols() && !mask(r, c + 1));
            out.set(r, c, edge);
        }
    return out;
}

/// Distance within which a contour pixel is replaced by Canny edges.
inline constexpr double snap_band = 2.0;

/// Canny edges within `snap_band` of the longest contour, plus the contour
/// pixels that have no Canny edge that close.
inline BinaryMask fuse_contour_with_edges(const ContourPath& contour, const BinaryMask& canny) {
    const auto rows = static_cast<std::ptrdiff_t>(canny.rows()), cols = static_cast<std::ptrdiff_t>(canny.cols());
    const auto reach = static_cast<std::ptrdiff_t>(std::floor(snap_band));
    const double band2 = snap_band * snap_band;
    BinaryMask out(canny.rows(), canny.cols());
    for (const auto& p : contour.points) {
        bool snapped = false;
        for (std::ptrdiff_t dr = -reach; dr <= reach; ++dr)
            for (std::ptrdiff_t dc = -reach; dc <= reach; ++dc) {
                if (static_cast<double>(dr * dr + dc * dc) > band2) continue;
                const auto r = static_cast<std::ptrdiff_t>(p.row) + dr, c = static_cast<std::ptrdiff_t>(p.col) + dc;
                if (r < 0 || c < 0 || r >= rows || c >= cols) continue;
                if (canny(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                    out.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), true);
                    snapped = true;
                }
            }
        if (!snapped) out.set(p.row, p.col, true);
    }
    return out;
}

/// crf_refine -> binarize at 0.5 -> longest contour -> snap onto Canny edges.
inline BinaryMask make_pseudo_boundary(const ScoreMap& sem_map, const RgbImage& rgb, const CrfParams& crf = {},
                                       const CannyParams& canny = {}) {
    const auto refined = crf_refine(sem_map, rgb, crf);
    BinaryMask object(refined.rows(), refined.cols());
    for (std::size_t i = 0; i < refined.size(); ++i) object.set(i, refined[i] >= 0.5);
    if (object.count() == 0) throw EmptyObject();

    const auto contours = trace_contours(object);
    const auto longest = std::max_element(contours.begin(), contours.end(),
                                          [](const auto& a, const auto& b) { return a.length() < b.length(); });
    return fuse_contour_with_edges(*longest, canny_edges(to_gray(rgb), canny));
}

}  // namespace locmap
