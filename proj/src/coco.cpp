#include "flakeforge/coco.hpp"

#include <fstream>
#include <set>

#include "flakeforge/error.hpp"

namespace flakeforge {

BBox bbox_from_mask(const FlakeMask& mask, int pos_x, int pos_y) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw DomainError("bbox_from_mask: empty mask");
    return {pos_x + x0, pos_y + y0, x1 - x0 + 1, y1 - y0 + 1};
}

int category_id_of(LayerClass c) {
    switch (c) {
        case LayerClass::Mono: return 1;
        case LayerClass::Few: return 2;
        case LayerClass::Thick: return 3;
    }
    return 0;
}

CocoDataset to_coco(const std::vector<SceneAnnotation>& scenes) {
    CocoDataset ds;
    ds.categories = {{1, "Mono", "flake"}, {2, "Few", "flake"}, {3, "Thick", "flake"}};

    std::set<std::string> names;
    int image_id = 0, ann_id = 0;
    for (const auto& scene : scenes) {
        if (!names.insert(scene.file_name).second)
            throw ValidationError("to_coco: duplicate file name: " + scene.file_name);
        ds.images.push_back({++image_id, scene.file_name, scene.width, scene.height});
        for (const auto& flake : scene.flakes) {
            CocoAnnotationEntry a;
            a.id = ++ann_id;
            a.image_id = image_id;
            a.category_id = category_id_of(flake.layer_class);
            a.bbox = bbox_from_mask(flake.mask, flake.x, flake.y);
            a.area = static_cast<long long>(flake.mask.area());
            ds.annotations.push_back(a);
        }
    }
    return ds;
}

nlohmann::json coco_to_json(const CocoDataset& dataset) {
    nlohmann::json j;
    j["images"] = nlohmann::json::array();
    for (const auto& im : dataset.images)
        j["images"].push_back({{"id", im.id},
                               {"file_name", im.file_name},
                               {"width", im.width},
                               {"height", im.height}});
    j["annotations"] = nlohmann::json::array();
    for (const auto& a : dataset.annotations)
        j["annotations"].push_back({{"id", a.id},
                                    {"image_id", a.image_id},
                                    {"category_id", a.category_id},
                                    {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                                    {"area", a.area},
                                    {"iscrowd", 0}});
    j["categories"] = nlohmann::json::array();
    for (const auto& c : dataset.categories)
        j["categories"].push_back(
            {{"id", c.id}, {"name", c.name}, {"supercategory", c.supercategory}});
    return j;
}

CocoDataset coco_from_json(const nlohmann::json& j) {
    try {
        CocoDataset ds;
        for (const auto& im : j.at("images"))
            ds.images.push_back({im.at("id").get<int>(), im.at("file_name").get<std::string>(),
                                 im.at("width").get<int>(), im.at("height").get<int>()});
        for (const auto& a : j.at("annotations")) {
            CocoAnnotationEntry e;
            e.id = a.at("id").get<int>();
            e.image_id = a.at("image_id").get<int>();
            e.category_id = a.at("category_id").get<int>();
            const auto& b = a.at("bbox");
            if (b.size() != 4) throw ValidationError("coco: bbox needs 4 numbers");
            e.bbox = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
            e.area = a.at("area").get<long long>();
            ds.annotations.push_back(e);
        }
        for (const auto& c : j.at("categories"))
            ds.categories.push_back({c.at("id").get<int>(), c.at("name").get<std::string>(),
                                     c.at("supercategory").get<std::string>()});
        return ds;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("coco: ") + e.what());
    }
}

void validate_coco(const CocoDataset& dataset) {
    std::set<int> image_ids, ann_ids, cat_ids;
    std::set<std::string> names;
    for (const auto& im : dataset.images) {
        if (!image_ids.insert(im.id).second)
            throw ValidationError("coco: duplicate image id " + std::to_string(im.id));
        if (!names.insert(im.file_name).second)
            throw ValidationError("coco: duplicate file name " + im.file_name);
        if (im.width < 1 || im.height < 1)
            throw ValidationError("coco: non-positive image size for " + im.file_name);
    }
    for (const auto& c : dataset.categories) {
        if (!cat_ids.insert(c.id).second)
            throw ValidationError("coco: duplicate category id " + std::to_string(c.id));
        if (c.supercategory != "flake")
            throw ValidationError("coco: unexpected supercategory " + c.supercategory);
    }
    for (const auto& a : dataset.annotations) {
        if (!ann_ids.insert(a.id).second)
            throw ValidationError("coco: duplicate annotation id " + std::to_string(a.id));
        if (!image_ids.count(a.image_id))
            throw ValidationError("coco: annotation " + std::to_string(a.id) +
                                  " references missing image " + std::to_string(a.image_id));
        if (!cat_ids.count(a.category_id))
            throw ValidationError("coco: annotation " + std::to_string(a.id) +
                                  " references missing category " + std::to_string(a.category_id));
        const auto im = std::find_if(dataset.images.begin(), dataset.images.end(),
                                     [&](const CocoImage& i) { return i.id == a.image_id; });
        if (a.bbox.w < 1 || a.bbox.h < 1 || a.bbox.x < 0 || a.bbox.y < 0 ||
            a.bbox.x + a.bbox.w > im->width || a.bbox.y + a.bbox.h > im->height)
            throw ValidationError("coco: annotation " + std::to_string(a.id) +
                                  " bbox outside image bounds");
        if (a.area < 1)
            throw ValidationError("coco: annotation " + std::to_string(a.id) + " has empty area");
        if (a.area > static_cast<long long>(a.bbox.w) * a.bbox.h)
            throw ValidationError("coco: annotation " + std::to_string(a.id) +
                                  " area exceeds its bbox");
    }
}

void write_coco_atomic(const std::filesystem::path& path, const CocoDataset& dataset) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << coco_to_json(dataset).dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

} // namespace flakeforge
