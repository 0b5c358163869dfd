#pragma once

// Synthetic datasets for end-to-end checks. Each image holds one rectangle or
// ellipse object. Feature vectors of object pixels share one direction, the
// first-stage map only lights up a compact part of the object.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"
#include "locmap/manifest.hpp"
#include "locmap/npy.hpp"
#include "locmap/png.hpp"
#include "locmap/random.hpp"

namespace locmap {

struct FixtureOptions {
    std::size_t image_size = 96;
    /// Image pixels per feature cell along each axis.
    std::size_t stride = 2;
    std::size_t channels = 16;
    double noise = 0.05;
    int num_classes = 10;
    /// Probability that pred_label equals gt_label.
    double pred_accuracy = 0.8;
    std::size_t bg_clusters = 3;
    /// Cosine between each background direction and the object direction.
    double bg_object_cosine = -0.5;
    /// Minimum share of the object covered by the first-stage highlight.
    double highlight_fraction = 0.35;
};

/// One generated image, everything in memory.
struct FixtureImage {
    RealGrid cam;           // first-stage map at feature resolution, raw (not normalized)
    FeatureStack features;  // C x h x w
    BinaryMask object;      // object at feature resolution
    BinaryMask highlight;   // part of the object the first-stage map covers
    BinaryMask mask;        // object at image resolution
    RgbImage rgb;
    BBox box;
    int gt_label = 0;
    int pred_label = 0;
};

namespace detail {

inline std::vector<double> random_unit(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double norm = 0.0;
    while (norm < 1e-6) {
        norm = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
    }
    for (auto& x : v) x /= norm;
    return v;
}

/// Unit vector at cosine `cosine` to the unit vector `u`.
inline std::vector<double> direction_at_cosine(Rng& rng, const std::vector<double>& u, double cosine) {
    std::vector<double> v;
    double norm = 0.0;
    while (norm < 1e-6) {
        v = random_unit(rng, u.size());
        double dot = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dot += v[i] * u[i];
        norm = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            v[i] -= dot * u[i];
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
    }
    const double side = std::sqrt(1.0 - cosine * cosine);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = side * v[i] / norm + cosine * u[i];
    return v;
}

inline BBox tight_box(const BinaryMask& m) {
    BBox b{static_cast<std::int64_t>(m.cols()), static_cast<std::int64_t>(m.rows()), -1, -1};
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            if (m(r, c)) {
                b.x0 = std::min<std::int64_t>(b.x0, static_cast<std::int64_t>(c));
                b.y0 = std::min<std::int64_t>(b.y0, static_cast<std::int64_t>(r));
                b.x1 = std::max<std::int64_t>(b.x1, static_cast<std::int64_t>(c));
                b.y1 = std::max<std::int64_t>(b.y1, static_cast<std::int64_t>(r));
            }
    return b;
}

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace detail

inline FixtureImage make_fixture_image(Rng& rng, const FixtureOptions& opts = {}) {
    if (opts.stride == 0 || opts.image_size % opts.stride != 0)
        throw InvalidInput("fixture image size must be a multiple of the stride");
    const std::size_t g = opts.image_size / opts.stride;
    if (g < 36) throw InvalidInput("fixture feature grid must be at least 36 cells");
    if (opts.channels < 2 || opts.bg_clusters == 0 || opts.num_classes < 2)
        throw InvalidInput("fixture needs >= 2 channels, >= 1 background cluster and >= 2 classes");

    FixtureImage img;
    const auto gi = static_cast<std::int64_t>(g);

    // Object shape on the feature grid.
    const bool ellipse = rng.bernoulli(0.5);
    const auto hy = rng.integer(9, 15), hx = rng.integer(9, 15);
    const auto cy = rng.integer(hy + 1, gi - hy - 2), cx = rng.integer(hx + 1, gi - hx - 2);
    img.object = BinaryMask(g, g);
    std::vector<std::size_t> object_pixels;
    for (std::int64_t r = 0; r < gi; ++r)
        for (std::int64_t c = 0; c < gi; ++c) {
            const double dy = static_cast<double>(r - cy) / static_cast<double>(hy);
            const double dx = static_cast<double>(c - cx) / static_cast<double>(hx);
            const bool in = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
            if (in) {
                img.object.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), true);
                object_pixels.push_back(static_cast<std::size_t>(r * gi + c));
            }
        }

    // Features: object pixels along u, background clusters in vertical bands.
    const auto u = detail::random_unit(rng, opts.channels);
    std::vector<std::vector<double>> bg_dirs;
    for (std::size_t k = 0; k < opts.bg_clusters; ++k)
        bg_dirs.push_back(detail::direction_at_cosine(rng, u, opts.bg_object_cosine));
    const std::size_t plane = g * g;
    std::vector<double> feat(opts.channels * plane);
    for (std::size_t p = 0; p < plane; ++p) {
        const auto& dir = img.object[p] ? u : bg_dirs[(p % g) * opts.bg_clusters / g];
        const double scale = rng.uniform(0.5, 1.5);
        for (std::size_t ch = 0; ch < opts.channels; ++ch)
            feat[ch * plane + p] = scale * dir[ch] + rng.normal(0.0, opts.noise);
    }
    img.features = FeatureStack(opts.channels, g, g, std::move(feat));

    // First-stage map: a disk around a random object pixel, grown until it
    // covers the requested share of the object.
    const auto centre = object_pixels[static_cast<std::size_t>(
        rng.integer(0, static_cast<std::int64_t>(object_pixels.size()) - 1))];
    const double ccy = static_cast<double>(centre / g), ccx = static_cast<double>(centre % g);
    auto dist2 = [&](std::size_t p) {
        const double dy = static_cast<double>(p / g) - ccy, dx = static_cast<double>(p % g) - ccx;
        return dy * dy + dx * dx;
    };
    const auto needed = static_cast<std::size_t>(std::ceil(opts.highlight_fraction * static_cast<double>(object_pixels.size())));
    double radius = 1.0;
    for (;; radius += 0.5) {
        std::size_t covered = 0;
        for (auto p : object_pixels) covered += dist2(p) <= radius * radius ? 1 : 0;
        if (covered >= needed) break;
    }
    img.highlight = BinaryMask(g, g);
    img.cam = RealGrid(g, g);
    const double spread = 2.0 * (radius / 2.0) * (radius / 2.0);
    for (std::size_t p = 0; p < plane; ++p) {
        const bool lit = img.object[p] && dist2(p) <= radius * radius;
        img.highlight.set(p, lit);
        const double v = lit ? 0.4 + 0.6 * std::exp(-dist2(p) / spread) : rng.uniform(0.0, 0.1);
        img.cam[p] = 4.0 * v - 1.0;
    }

    // Full-resolution mask, box and RGB render.
    const std::size_t n = opts.image_size, s = opts.stride;
    img.mask = BinaryMask(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) img.mask.set(r, c, img.object(r / s, c / s));
    img.box = detail::tight_box(img.mask);

    std::array<double, 3> fg_color{}, bg_color{};
    for (std::size_t k = 0; k < 3; ++k) {
        fg_color[k] = rng.uniform(150.0, 230.0);
        bg_color[k] = rng.uniform(30.0, 100.0);
    }
    img.rgb = RgbImage{n, n, std::vector<std::uint8_t>(n * n * 3)};
    for (std::size_t p = 0; p < n * n; ++p) {
        const auto& base = img.mask[p] ? fg_color : bg_color;
        for (std::size_t k = 0; k < 3; ++k) img.rgb.data[p * 3 + k] = detail::to_byte(base[k] + rng.normal(0.0, 8.0));
    }

    img.gt_label = static_cast<int>(rng.integer(0, opts.num_classes - 1));
    if (rng.bernoulli(opts.pred_accuracy)) {
        img.pred_label = img.gt_label;
    } else {
        const auto other = static_cast<int>(rng.integer(0, opts.num_classes - 2));
        img.pred_label = other >= img.gt_label ? other + 1 : other;
    }
    return img;
}

/// Id of the i-th generated image.
inline std::string fixture_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%04zu", i);
    return buf;
}

/// Writes `n` images plus manifest.json into `out_dir` and returns the
/// manifest path. Image i draws from its own generator seeded by a master
/// stream, so image i is the same for any n > i.
inline fs::path gen_fixtures(std::uint64_t seed, const fs::path& out_dir, std::size_t n,
                             const FixtureOptions& opts = {}) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    Rng master(seed);
    Manifest m;
    m.num_classes = opts.num_classes;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(master.engine()());
        const auto img = make_fixture_image(rng, opts);
        const auto id = fixture_id(i);
        ImageRecord rec;
        rec.id = id;
        rec.width = rec.height = opts.image_size;
        rec.cam = out_dir / (id + "_cam.npy");
        rec.features = out_dir / (id + "_feat.npy");
        rec.gt_mask = out_dir / (id + "_mask.png");
        rec.rgb = out_dir / (id + "_rgb.png");
        rec.gt_boxes = {img.box};
        rec.gt_label = img.gt_label;
        rec.pred_label = img.pred_label;
        npy::write_array(rec.cam, npy::from_grid(img.cam));
        npy::write_array(*rec.features, npy::from_stack(img.features));
        png::write_mask_png(rec.gt_mask, img.mask);
        png::write_rgb_png(*rec.rgb, img.rgb);
        m.images.push_back(std::move(rec));
    }
    const auto path = out_dir / "manifest.json";
    write_manifest(path, m);
    return path;
}

/// Per-pixel edge-fitting problem with planted hard negatives.
struct ClutterFixture {
    FeatureStack features;  // 3 channels
    BinaryMask edges;
    BinaryMask clutter;     // background pixels that look like edges on channel 0
};

/// Edges are outlines of random rectangles. Channel 0 is high on edges and on
/// clutter, channel 1 is high on edges and uniform on plain background,
/// channel 2 is noise. Without clutter the classes are linearly separable.
inline ClutterFixture make_clutter_fixture(std::uint64_t seed, std::size_t size = 64, double clutter_fraction = 0.05,
                                           double noise = 0.05) {
    if (size < 16) throw InvalidInput("clutter fixture needs size >= 16");
    Rng rng(seed);
    const auto n = static_cast<std::int64_t>(size);
    ClutterFixture fx{{}, BinaryMask(size, size), BinaryMask(size, size)};
    for (int k = 0; k < 4; ++k) {
        const auto y0 = rng.integer(1, n / 2), x0 = rng.integer(1, n / 2);
        const auto y1 = rng.integer(y0 + 6, n - 2), x1 = rng.integer(x0 + 6, n - 2);
        for (auto r = y0; r <= y1; ++r)
            for (auto c = x0; c <= x1; ++c)
                if (r == y0 || r == y1 || c == x0 || c == x1)
                    fx.edges.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), true);
    }
    const std::size_t plane = size * size;
    std::vector<double> feat(3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
        double f0 = 0.0, f1 = rng.uniform();
        if (fx.edges[p]) {
            f0 = 1.0;
            f1 = 1.0;
        } else if (rng.bernoulli(clutter_fraction)) {
            fx.clutter.set(p, true);
            f0 = 1.0;
            f1 = 0.0;
        }
        feat[p] = f0 + rng.normal(0.0, noise);
        feat[plane + p] = f1 + rng.normal(0.0, noise);
        feat[2 * plane + p] = rng.normal(0.0, noise);
    }
    fx.features = FeatureStack(3, size, size, std::move(feat));
    return fx;
}

}  // namespace locmap
