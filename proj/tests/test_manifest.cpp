#include <gtest/gtest.h>

#include <fstream>

#include "locmap/manifest.hpp"
#include "test_support.hpp"

using namespace locmap;
using locmap::testing::TempDir;
using nlohmann::json;

namespace {

class ManifestTest : public ::testing::Test {
protected:
    TempDir dir{"manifest"};

    void SetUp() override {
        for (const char* name : {"a_cam.npy", "a_mask.png", "a_feat.npy", "b_cam.npy", "b_mask.png"})
            std::ofstream(dir / name) << "x";
    }

    static json record(const std::string& id) {
        return {{"id", id},
                {"width", 10},
                {"height", 8},
                {"cam", id + "_cam.npy"},
                {"gt_mask", id + "_mask.png"},
                {"gt_boxes", json::array({json::array({0, 0, 9, 7})})},
                {"gt_label", 2}};
    }

    static json minimal() { return {{"version", 1}, {"num_classes", 5}, {"images", json::array({record("a")})}}; }

    SchemaError schema_error(const json& doc) {
        try {
            parse_manifest(doc, dir.path());
        } catch (const SchemaError& e) {
            return e;
        }
        ADD_FAILURE() << "expected SchemaError";
        return SchemaError(SchemaError::Kind::BadJson, "", "");
    }
};

}  // namespace

TEST_F(ManifestTest, MinimalOneImage) {
    const auto m = parse_manifest(minimal(), dir.path());
    ASSERT_EQ(m.images.size(), 1u);
    const auto& r = m.images[0];
    EXPECT_EQ(r.id, "a");
    EXPECT_EQ(r.width, 10u);
    EXPECT_EQ(r.height, 8u);
    EXPECT_EQ(r.cam, (dir.path() / "a_cam.npy").lexically_normal());
    EXPECT_FALSE(r.features);
    EXPECT_FALSE(r.pred_label);
    EXPECT_EQ(r.gt_boxes, (std::vector<BBox>{{0, 0, 9, 7}}));
}

TEST_F(ManifestTest, OptionalFieldsAndOrder) {
    auto doc = minimal();
    doc["images"][0]["features"] = "a_feat.npy";
    doc["images"][0]["pred_label"] = 4;
    doc["images"].push_back(record("b"));
    const auto m = parse_manifest(doc, dir.path());
    ASSERT_EQ(m.images.size(), 2u);
    EXPECT_EQ(m.images[0].id, "a");
    EXPECT_EQ(m.images[1].id, "b");
    EXPECT_EQ(*m.images[0].pred_label, 4);
    EXPECT_TRUE(m.images[0].features);
}

TEST_F(ManifestTest, DuplicateId) {
    auto doc = minimal();
    doc["images"].push_back(record("a"));
    const auto e = schema_error(doc);
    EXPECT_EQ(e.kind(), SchemaError::Kind::DuplicateId);
    EXPECT_EQ(e.pointer(), "/images/1/id");
}

TEST_F(ManifestTest, MissingFileNamesThePath) {
    auto doc = minimal();
    doc["images"][0]["cam"] = "nope.npy";
    const auto e = schema_error(doc);
    EXPECT_EQ(e.kind(), SchemaError::Kind::MissingFile);
    EXPECT_EQ(e.pointer(), "/images/0/cam");
    EXPECT_NE(std::string(e.what()).find("nope.npy"), std::string::npos);
}

TEST_F(ManifestTest, UnknownVersion) {
    auto doc = minimal();
    doc["version"] = 2;
    EXPECT_EQ(schema_error(doc).kind(), SchemaError::Kind::UnknownVersion);
}

TEST_F(ManifestTest, MissingFieldPointer) {
    auto doc = minimal();
    doc["images"][0].erase("gt_label");
    const auto e = schema_error(doc);
    EXPECT_EQ(e.kind(), SchemaError::Kind::MissingField);
    EXPECT_EQ(e.pointer(), "/images/0/gt_label");
}

TEST_F(ManifestTest, WrongTypeAndInvalidValues) {
    auto doc = minimal();
    doc["images"][0]["width"] = "ten";
    EXPECT_EQ(schema_error(doc).kind(), SchemaError::Kind::WrongType);

    doc = minimal();
    doc["images"][0]["gt_label"] = 5;
    EXPECT_EQ(schema_error(doc).kind(), SchemaError::Kind::InvalidValue);

    doc = minimal();
    doc["images"][0]["gt_boxes"] = json::array({json::array({0, 0, 10, 7})});
    const auto e = schema_error(doc);
    EXPECT_EQ(e.kind(), SchemaError::Kind::InvalidValue);
    EXPECT_EQ(e.pointer(), "/images/0/gt_boxes/0");

    doc = minimal();
    doc["images"][0]["gt_boxes"] = json::array({json::array({5, 0, 4, 7})});
    EXPECT_EQ(schema_error(doc).kind(), SchemaError::Kind::InvalidValue);
}

TEST_F(ManifestTest, LoadFromFileResolvesRelativePaths) {
    std::ofstream(dir / "m.json") << minimal().dump();
    const auto m = load_manifest(dir / "m.json");
    EXPECT_EQ(m.images[0].gt_mask, (dir.path() / "a_mask.png").lexically_normal());
}

TEST_F(ManifestTest, BadJsonAndMissingFile) {
    std::ofstream(dir / "bad.json") << "{ not json";
    try {
        load_manifest(dir / "bad.json");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.kind(), SchemaError::Kind::BadJson);
    }
    EXPECT_THROW(load_manifest(dir / "absent.json"), IoError);
}

TEST_F(ManifestTest, WriteThenLoadRoundTrip) {
    auto doc = minimal();
    doc["images"][0]["features"] = "a_feat.npy";
    doc["images"][0]["pred_label"] = 1;
    doc["images"].push_back(record("b"));
    const auto m = parse_manifest(doc, dir.path());
    write_manifest(dir / "out.json", m);
    const auto back = load_manifest(dir / "out.json");
    ASSERT_EQ(back.images.size(), m.images.size());
    for (std::size_t i = 0; i < m.images.size(); ++i) {
        EXPECT_EQ(back.images[i].id, m.images[i].id);
        EXPECT_EQ(back.images[i].cam, m.images[i].cam);
        EXPECT_EQ(back.images[i].features, m.images[i].features);
        EXPECT_EQ(back.images[i].gt_boxes, m.images[i].gt_boxes);
        EXPECT_EQ(back.images[i].pred_label, m.images[i].pred_label);
    }
    // Paths are stored relative to the manifest.
    std::ifstream in(dir / "out.json");
    const auto written = json::parse(in);
    EXPECT_EQ(written["images"][0]["cam"], "a_cam.npy");
}
