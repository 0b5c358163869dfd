#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "locmap/core.hpp"
#include "locmap/errors.hpp"

namespace locmap {

namespace fs = std::filesystem;

/// One dataset entry. Paths are absolute once loaded.
struct ImageRecord {
    std::string id;
    std::size_t width = 0;
    std::size_t height = 0;
    fs::path cam;
    std::optional<fs::path> features;
    fs::path gt_mask;
    std::vector<BBox> gt_boxes;
    int gt_label = 0;
    std::optional<int> pred_label;
    std::optional<fs::path> rgb;
    /// Pseudo-boundary mask written by gen-edges.
    std::optional<fs::path> edges;
};

struct Manifest {
    int version = 1;
    int num_classes = 1;
    std::vector<ImageRecord> images;
};

namespace detail {

using nlohmann::json;

inline std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }

inline const json& field(const json& obj, const std::string& base, const std::string& key) {
    if (!obj.contains(key)) throw SchemaError(SchemaError::Kind::MissingField, ptr(base, key), "required field");
    return obj.at(key);
}

inline std::int64_t as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw SchemaError(SchemaError::Kind::WrongType, where, "expected an integer");
    return v.get<std::int64_t>();
}

inline std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw SchemaError(SchemaError::Kind::WrongType, where, "expected a string");
    return v.get<std::string>();
}

inline fs::path existing_file(const json& v, const std::string& where, const fs::path& root) {
    const auto rel = as_string(v, where);
    auto p = (root / rel).lexically_normal();
    if (!fs::is_regular_file(p)) throw SchemaError(SchemaError::Kind::MissingFile, where, "\"" + p.string() + "\"");
    return p;
}

inline std::string relative_to(const fs::path& p, const fs::path& dir) {
    const auto abs = fs::absolute(p).lexically_normal();
    auto rel = abs.lexically_relative(fs::absolute(dir).lexically_normal());
    return (rel.empty() ? abs : rel).generic_string();
}

}  // namespace detail

/// Validates a parsed manifest document. Relative paths resolve against `root`.
inline Manifest parse_manifest(const nlohmann::json& doc, const fs::path& root) {
    using detail::as_int;
    using detail::field;
    using K = SchemaError::Kind;
    if (!doc.is_object()) throw SchemaError(K::WrongType, "", "manifest must be a JSON object");

    Manifest m;
    const auto version = as_int(field(doc, "", "version"), "/version");
    if (version != 1) throw SchemaError(K::UnknownVersion, "/version", "version " + std::to_string(version));
    m.version = 1;
    const auto classes = as_int(field(doc, "", "num_classes"), "/num_classes");
    if (classes < 1) throw SchemaError(K::InvalidValue, "/num_classes", "must be >= 1");
    m.num_classes = static_cast<int>(classes);

    const auto& images = field(doc, "", "images");
    if (!images.is_array()) throw SchemaError(K::WrongType, "/images", "expected an array");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string base = "/images/" + std::to_string(i);
        const auto& item = images[i];
        if (!item.is_object()) throw SchemaError(K::WrongType, base, "expected an object");

        ImageRecord rec;
        rec.id = detail::as_string(field(item, base, "id"), base + "/id");
        if (!ids.insert(rec.id).second) throw SchemaError(K::DuplicateId, base + "/id", "id '" + rec.id + "'");

        const auto w = as_int(field(item, base, "width"), base + "/width");
        const auto h = as_int(field(item, base, "height"), base + "/height");
        if (w < 1) throw SchemaError(K::InvalidValue, base + "/width", "must be >= 1");
        if (h < 1) throw SchemaError(K::InvalidValue, base + "/height", "must be >= 1");
        rec.width = static_cast<std::size_t>(w);
        rec.height = static_cast<std::size_t>(h);

        rec.cam = detail::existing_file(field(item, base, "cam"), base + "/cam", root);
        rec.gt_mask = detail::existing_file(field(item, base, "gt_mask"), base + "/gt_mask", root);
        if (item.contains("features"))
            rec.features = detail::existing_file(item["features"], base + "/features", root);
        if (item.contains("rgb")) rec.rgb = detail::existing_file(item["rgb"], base + "/rgb", root);
        if (item.contains("edges")) rec.edges = detail::existing_file(item["edges"], base + "/edges", root);

        const auto& boxes = field(item, base, "gt_boxes");
        if (!boxes.is_array()) throw SchemaError(K::WrongType, base + "/gt_boxes", "expected an array");
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            const std::string bp = base + "/gt_boxes/" + std::to_string(b);
            if (!boxes[b].is_array() || boxes[b].size() != 4)
                throw SchemaError(K::WrongType, bp, "expected [x0, y0, x1, y1]");
            BBox box{as_int(boxes[b][0], bp + "/0"), as_int(boxes[b][1], bp + "/1"), as_int(boxes[b][2], bp + "/2"),
                     as_int(boxes[b][3], bp + "/3")};
            if (!box.inside(rec.height, rec.width))
                throw SchemaError(K::InvalidValue, bp, "box is inverted or outside the image");
            rec.gt_boxes.push_back(box);
        }

        const auto label = as_int(field(item, base, "gt_label"), base + "/gt_label");
        if (label < 0 || label >= classes)
            throw SchemaError(K::InvalidValue, base + "/gt_label", "label outside [0, num_classes)");
        rec.gt_label = static_cast<int>(label);
        if (item.contains("pred_label")) {
            const auto pred = as_int(item["pred_label"], base + "/pred_label");
            if (pred < 0 || pred >= classes)
                throw SchemaError(K::InvalidValue, base + "/pred_label", "label outside [0, num_classes)");
            rec.pred_label = static_cast<int>(pred);
        }
        m.images.push_back(std::move(rec));
    }
    return m;
}

inline Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(SchemaError::Kind::BadJson, "", e.what());
    }
    return parse_manifest(doc, fs::absolute(path).lexically_normal().parent_path());
}

/// Serializes with paths written relative to `dir`.
inline nlohmann::json manifest_to_json(const Manifest& m, const fs::path& dir) {
    using detail::relative_to;
    nlohmann::json images = nlohmann::json::array();
    for (const auto& r : m.images) {
        nlohmann::json j;
        j["id"] = r.id;
        j["width"] = r.width;
        j["height"] = r.height;
        j["cam"] = relative_to(r.cam, dir);
        if (r.features) j["features"] = relative_to(*r.features, dir);
        j["gt_mask"] = relative_to(r.gt_mask, dir);
        auto boxes = nlohmann::json::array();
        for (const auto& b : r.gt_boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
        j["gt_boxes"] = std::move(boxes);
        j["gt_label"] = r.gt_label;
        if (r.pred_label) j["pred_label"] = *r.pred_label;
        if (r.rgb) j["rgb"] = relative_to(*r.rgb, dir);
        if (r.edges) j["edges"] = relative_to(*r.edges, dir);
        images.push_back(std::move(j));
    }
    return {{"version", m.version}, {"num_classes", m.num_classes}, {"images", std::move(images)}};
}

inline void write_manifest(const fs::path& path, const Manifest& m) {
    const auto dir = fs::absolute(path).lexically_normal().parent_path();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create manifest '" + path.string() + "'");
    out << manifest_to_json(m, dir).dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace locmap
