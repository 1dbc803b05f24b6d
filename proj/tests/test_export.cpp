#include <doctest.h>

#include "flakeforge/coco.hpp"
#include "flakeforge/error.hpp"
#include "flakeforge/qa.hpp"

#include "helpers.hpp"

using namespace flakeforge;

namespace {

FlakeMask full_mask(int w, int h) {
    FlakeMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, 1);
    return m;
}

FlakeInstance make_flake(int x, int y, int w, int h, int layers,
                         const std::string& material = "mos2") {
    FlakeInstance f;
    f.mask = full_mask(w, h);
    f.x = x;
    f.y = y;
    f.material_id = material;
    f.layer_count = layers;
    f.thickness_nm = layers * 0.65;
    f.color = {0.4, 0.5, 0.6};
    f.layer_class = layer_class_of(layers);
    f.contrast_delta_e = 7.5;
    return f;
}

SceneAnnotation make_scene(const std::string& name, std::vector<FlakeInstance> flakes) {
    SceneAnnotation s;
    s.file_name = name;
    s.width = 256;
    s.height = 256;
    s.flakes = std::move(flakes);
    return s;
}

} // namespace

TEST_CASE("bbox_from_mask") {
    SUBCASE("full mask spans the placement window") {
        const auto b = bbox_from_mask(full_mask(7, 5), 10, 20);
        CHECK(b == BBox{10, 20, 7, 5});
    }
    SUBCASE("single pixel") {
        FlakeMask m;
        m.width = 5;
        m.height = 4;
        m.bits.assign(20, 0);
        m.bits[static_cast<std::size_t>(2) * 5 + 3] = 1;  // local (x=3, y=2)
        const auto b = bbox_from_mask(m, 0, 0);
        CHECK(b == BBox{3, 2, 1, 1});
    }
    SUBCASE("random masks match a pixel-loop oracle") {
        Rng rng(101);
        for (int i = 0; i < 200; ++i) {
            const auto mask = random_flake_mask(rng, 6, 18);
            const int px = static_cast<int>(rng.uniform_int(0, 50));
            const int py = static_cast<int>(rng.uniform_int(0, 50));
            const auto b = bbox_from_mask(mask, px, py);
            int x0 = 1 << 20, y0 = 1 << 20, x1 = -1, y1 = -1;
            for (int y = 0; y < mask.height; ++y)
                for (int x = 0; x < mask.width; ++x)
                    if (mask.at(x, y)) {
                        x0 = std::min(x0, px + x);
                        y0 = std::min(y0, py + y);
                        x1 = std::max(x1, px + x);
                        y1 = std::max(y1, py + y);
                    }
            CHECK(b == BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1});
        }
    }
    SUBCASE("empty mask is a domain error") {
        FlakeMask m;
        m.width = 3;
        m.height = 3;
        m.bits.assign(9, 0);
        CHECK_THROWS_AS(bbox_from_mask(m, 0, 0), DomainError);
    }
}

TEST_CASE("to_coco") {
    SUBCASE("empty input still carries the three categories") {
        const auto ds = to_coco({});
        CHECK(ds.images.empty());
        CHECK(ds.annotations.empty());
        REQUIRE(ds.categories.size() == 3);
        CHECK(ds.categories[0].name == "Mono");
        CHECK(ds.categories[1].name == "Few");
        CHECK(ds.categories[2].name == "Thick");
        for (const auto& c : ds.categories) CHECK(c.supercategory == "flake");
        const auto j = coco_to_json(ds);
        CHECK(j["images"].is_array());
        CHECK(j["annotations"].is_array());
        CHECK(j["categories"].size() == 3);
        validate_coco(ds);
    }
    SUBCASE("a 1-layer flake lands in category Mono") {
        const auto ds = to_coco({make_scene("a.png", {make_flake(5, 6, 10, 8, 1)})});
        REQUIRE(ds.annotations.size() == 1);
        CHECK(ds.annotations[0].category_id == 1);
        CHECK(ds.categories[0].id == 1);
        CHECK(ds.categories[0].name == "Mono");
        CHECK(ds.annotations[0].bbox == BBox{5, 6, 10, 8});
        CHECK(ds.annotations[0].area == 80);
    }
    SUBCASE("ids are deterministic in scene then placement order") {
        const auto ds = to_coco({make_scene("a.png", {make_flake(0, 0, 4, 4, 1),
                                                      make_flake(10, 10, 4, 4, 3)}),
                                 make_scene("b.png", {make_flake(0, 0, 4, 4, 7)})});
        REQUIRE(ds.images.size() == 2);
        CHECK(ds.images[0].id == 1);
        CHECK(ds.images[1].id == 2);
        REQUIRE(ds.annotations.size() == 3);
        CHECK(ds.annotations[0].id == 1);
        CHECK(ds.annotations[1].id == 2);
        CHECK(ds.annotations[2].id == 3);
        CHECK(ds.annotations[2].image_id == 2);
        CHECK(ds.annotations[1].category_id == 2);
        CHECK(ds.annotations[2].category_id == 3);
    }
    SUBCASE("duplicate file names are rejected") {
        CHECK_THROWS_AS(to_coco({make_scene("a.png", {}), make_scene("a.png", {})}),
                        ValidationError);
    }
    SUBCASE("serialize then parse is structurally equal") {
        const auto ds = to_coco({make_scene("a.png", {make_flake(5, 6, 10, 8, 1),
                                                      make_flake(30, 40, 6, 6, 4)})});
        const auto back = coco_from_json(coco_to_json(ds));
        REQUIRE(back.images.size() == ds.images.size());
        REQUIRE(back.annotations.size() == ds.annotations.size());
        REQUIRE(back.categories.size() == ds.categories.size());
        for (std::size_t i = 0; i < ds.images.size(); ++i) {
            CHECK(back.images[i].id == ds.images[i].id);
            CHECK(back.images[i].file_name == ds.images[i].file_name);
            CHECK(back.images[i].width == ds.images[i].width);
        }
        for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
            CHECK(back.annotations[i].id == ds.annotations[i].id);
            CHECK(back.annotations[i].bbox == ds.annotations[i].bbox);
            CHECK(back.annotations[i].area == ds.annotations[i].area);
            CHECK(back.annotations[i].category_id == ds.annotations[i].category_id);
        }
    }
    SUBCASE("validator flags referential violations") {
        auto ds = to_coco({make_scene("a.png", {make_flake(5, 6, 10, 8, 1)})});
        auto broken = ds;
        broken.annotations[0].image_id = 99;
        CHECK_THROWS_AS(validate_coco(broken), ValidationError);
        broken = ds;
        broken.annotations[0].bbox.w = 1000;
        CHECK_THROWS_AS(validate_coco(broken), ValidationError);
        broken = ds;
        broken.annotations[0].area = 0;
        CHECK_THROWS_AS(validate_coco(broken), ValidationError);
        broken = ds;
        broken.images.push_back(broken.images[0]);
        CHECK_THROWS_AS(validate_coco(broken), ValidationError);
    }
}

TEST_CASE("gen_qa") {
    const QaTemplates templates;

    SUBCASE("three monolayers: counting conclusion carries the count") {
        const auto scene = make_scene(
            "s.png", {make_flake(0, 0, 5, 5, 1), make_flake(10, 10, 5, 5, 1),
                      make_flake(20, 20, 5, 5, 1), make_flake(30, 30, 5, 5, 4)});
        Rng rng(1);
        const auto records = gen_qa(scene, templates, rng);
        REQUIRE(records.size() == 3);
        CHECK(records[0].task == QaTask::Counting);
        CHECK(records[0].conclusion.find("3") != std::string::npos);
        CHECK(records[0].question == templates.counting[0]);
        for (const auto& r : records) CHECK(qa_consistent(r, scene));
    }
    SUBCASE("no monolayers: verification is negative") {
        const auto scene = make_scene("s.png", {make_flake(0, 0, 5, 5, 3)});
        Rng rng(2);
        const auto records = gen_qa(scene, templates, rng);
        CHECK(records[2].task == QaTask::Verification);
        CHECK(records[2].conclusion.rfind("No", 0) == 0);
        for (const auto& r : records) CHECK(qa_consistent(r, scene));
    }
    SUBCASE("localization lists exactly the monolayer boxes") {
        const auto scene = make_scene("s.png", {make_flake(3, 4, 5, 6, 1),
                                                make_flake(50, 60, 7, 8, 1),
                                                make_flake(100, 100, 9, 9, 6)});
        Rng rng(3);
        const auto records = gen_qa(scene, templates, rng);
        const auto& loc = records[1];
        CHECK(loc.task == QaTask::Localization);
        CHECK(loc.conclusion.find("[3, 4, 5, 6]") != std::string::npos);
        CHECK(loc.conclusion.find("[50, 60, 7, 8]") != std::string::npos);
        CHECK(loc.conclusion.find("[100, 100, 9, 9]") == std::string::npos);
        CHECK(qa_consistent(loc, scene));
    }
    SUBCASE("candidates enumerate every flake with physical quantities") {
        const auto scene = make_scene("s.png", {make_flake(0, 0, 5, 5, 1),
                                                make_flake(10, 10, 5, 5, 8)});
        Rng rng(4);
        const auto records = gen_qa(scene, templates, rng);
        const auto& cands = records[0].candidates;
        REQUIRE(cands.size() == 2);
        CHECK(cands[0]["class"] == "Mono");
        CHECK(cands[1]["class"] == "Thick");
        CHECK(cands[0]["material"] == "mos2");
        CHECK(cands[0].contains("delta_e"));
        CHECK(cands[0].contains("color"));
        CHECK(records[0].reasoning.find("dE") != std::string::npos);
    }
    SUBCASE("consistency checker rejects mismatched conclusions") {
        const auto scene = make_scene("s.png", {make_flake(0, 0, 5, 5, 1)});
        Rng rng(5);
        auto records = gen_qa(scene, templates, rng);
        records[0].conclusion = "There are 7 monolayer flakes in the image.";
        CHECK_FALSE(qa_consistent(records[0], scene));
        records[1].conclusion = "Monolayer flakes at: [9, 9, 9, 9].";
        CHECK_FALSE(qa_consistent(records[1], scene));
        records[2].conclusion = "No, the sample does not contain a monolayer flake.";
        CHECK_FALSE(qa_consistent(records[2], scene));
    }
    SUBCASE("jsonl serialization uses the documented keys") {
        const auto scene = make_scene("s.png", {make_flake(0, 0, 5, 5, 1)});
        Rng rng(6);
        const auto records = gen_qa(scene, templates, rng);
        const auto j = qa_to_json(records[0]);
        CHECK(j.contains("image"));
        CHECK(j.contains("task"));
        CHECK(j.contains("question"));
        CHECK(j["answer"].contains("candidates"));
        CHECK(j["answer"].contains("reasoning"));
        CHECK(j["answer"].contains("conclusion"));
        CHECK(j["task"] == "counting");
    }
}
