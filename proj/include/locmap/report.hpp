#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "locmap/direct_eval.hpp"
#include "locmap/edge_eval.hpp"
#include "locmap/errors.hpp"

namespace locmap::report {

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Creates missing parent directories.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

inline nlohmann::json curve_json(const EvalCurve& curve, nlohmann::json config) {
    std::vector<int> thresholds(threshold_count);
    for (int t = 0; t < threshold_count; ++t) thresholds[static_cast<std::size_t>(t)] = t;
    return {{"config", std::move(config)},
            {"curve",
             {{"thresholds", thresholds},
              {"mean_iou", curve.mean_iou},
              {"precision", curve.precision},
              {"recall", curve.recall}}},
            {"summary", {{"peak_iou", curve.peak_iou}, {"peak_t", curve.peak_t}, {"ap", curve.ap}}}};
}

inline nlohmann::json edge_json(const EdgeBenchResult& res, nlohmann::json config) {
    return {{"config", std::move(config)},
            {"curve",
             {{"thresholds", res.thresholds}, {"precision", res.precision}, {"recall", res.recall}, {"f", res.f}}},
            {"summary", {{"ods", res.ods}, {"ods_threshold", res.ods_threshold}, {"ois", res.ois}, {"ap", res.ap}}}};
}

/// One row per threshold with every per-threshold series of a report.
inline std::string curve_csv(const nlohmann::json& doc) {
    const auto& curve = doc.at("curve");
    std::vector<std::string> columns{"thresholds"};
    for (const char* key : {"mean_iou", "precision", "recall", "f"})
        if (curve.contains(key)) columns.emplace_back(key);
    std::ostringstream out;
    out << "threshold";
    for (std::size_t i = 1; i < columns.size(); ++i) out << ',' << columns[i];
    out << '\n';
    const std::size_t n = curve.at("thresholds").size();
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out << ',';
            out << format_number(curve.at(columns[i]).at(row).get<double>());
        }
        out << '\n';
    }
    return out.str();
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, x_label, y_label;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::size_t x_ticks = 5, y_ticks = 5;
};

/// Minimal line chart: axes, ticks, one polyline per series and a legend.
inline std::string svg_plot(const PlotSpec& spec, std::span<const Series> series,
                            std::span<const std::pair<double, double>> markers = {}) {
    constexpr double width = 480, height = 360, left = 60, right = 20, top = 40, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - spec.x_min) / (spec.x_max - spec.x_min) * pw; };
    auto py = [&](double y) { return top + ph - (y - spec.y_min) / (spec.y_max - spec.y_min) * ph; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << spec.title
        << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i <= spec.x_ticks; ++i) {
        const double v = spec.x_min + (spec.x_max - spec.x_min) * static_cast<double>(i) / static_cast<double>(spec.x_ticks);
        svg << "<line x1=\"" << num(px(v)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(px(v)) << "\" y2=\""
            << top + ph + 4 << "\" stroke=\"black\"/>"
            << "<text x=\"" << num(px(v)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
            << (spec.x_max > 10 ? std::to_string(static_cast<int>(std::lround(v))) : num(v)) << "</text>\n";
    }
    for (std::size_t i = 0; i <= spec.y_ticks; ++i) {
        const double v = spec.y_min + (spec.y_max - spec.y_min) * static_cast<double>(i) / static_cast<double>(spec.y_ticks);
        svg << "<line x1=\"" << left - 4 << "\" y1=\"" << num(py(v)) << "\" x2=\"" << left << "\" y2=\""
            << num(py(v)) << "\" stroke=\"black\"/>"
            << "<text x=\"" << left - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << spec.x_label
        << "</text>\n";
    svg << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << spec.y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % std::size(palette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            svg << (i ? " " : "") << num(px(series[s].x[i])) << ',' << num(py(series[s].y[i]));
        svg << "\"/>\n";
        const double ly = top + 14 + 14 * static_cast<double>(s);
        svg << "<line x1=\"" << left + pw - 110 << "\" y1=\"" << ly << "\" x2=\"" << left + pw - 90 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
            << "<text x=\"" << left + pw - 85 << "\" y=\"" << ly + 4 << "\">" << series[s].name << "</text>\n";
    }
    for (const auto& [x, y] : markers)
        svg << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3.5\" fill=\"black\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

/// IoU-Threshold plot of a map report, peak marked.
inline std::string iou_threshold_svg(const nlohmann::json& doc, const std::string& name) {
    const auto& curve = doc.at("curve");
    Series s{name, curve.at("thresholds").get<std::vector<double>>(), curve.at("mean_iou").get<std::vector<double>>()};
    const auto& summary = doc.at("summary");
    const std::pair<double, double> peak{summary.at("peak_t").get<double>(), summary.at("peak_iou").get<double>()};
    PlotSpec spec{"IoU-Threshold curve", "threshold", "mean IoU", 0, 255, 0, 1, 5, 5};
    return svg_plot(spec, std::span(&s, 1), std::span(&peak, 1));
}

/// Precision-recall plot of any report carrying precision and recall series.
inline std::string pr_svg(const nlohmann::json& doc, const std::string& name) {
    const auto& curve = doc.at("curve");
    Series s{name, curve.at("recall").get<std::vector<double>>(), curve.at("precision").get<std::vector<double>>()};
    PlotSpec spec{"Precision-Recall", "recall", "precision"};
    return svg_plot(spec, std::span(&s, 1));
}

/// Writes <stem>.csv and the SVG plots next to `json_path`.
inline void write_companions(const std::filesystem::path& json_path, const nlohmann::json& doc,
                             const std::string& name) {
    auto base = json_path;
    base.replace_extension();
    write_text(base.string() + ".csv", curve_csv(doc));
    if (doc.at("curve").contains("mean_iou")) write_text(base.string() + ".svg", iou_threshold_svg(doc, name));
    write_text(base.string() + "_pr.svg", pr_svg(doc, name));
}

}  // namespace locmap::report
