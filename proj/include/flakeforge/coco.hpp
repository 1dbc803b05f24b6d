#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flakeforge/synthesis.hpp"

namespace flakeforge {

struct BBox {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const BBox&) const = default;
};

// Tight axis-aligned bounds of the mask's true pixels, in image coordinates.
BBox bbox_from_mask(const FlakeMask& mask, int pos_x, int pos_y);

// One synthesized scene plus its ground truth, the unit of export.
struct SceneAnnotation {
    std::string file_name;  // unique image file name
    int width = 0, height = 0;
    std::vector<FlakeInstance> flakes;  // placement order
};

struct CocoImage {
    int id = 0;
    std::string file_name;
    int width = 0, height = 0;
};

struct CocoAnnotationEntry {
    int id = 0, image_id = 0, category_id = 0;
    BBox bbox;
    long long area = 0;  // mask pixel count
    // iscrowd is always 0
};

struct CocoCategory {
    int id = 0;
    std::string name;
    std::string supercategory = "flake";
};

struct CocoDataset {
    std::vector<CocoImage> images;
    std::vector<CocoAnnotationEntry> annotations;
    std::vector<CocoCategory> categories;
};

// Fixed category mapping.
int category_id_of(LayerClass c);  // Mono=1, Few=2, Thick=3

// Deterministic export: ids assigned by scene order then placement order.
// Rejects duplicate file names.
CocoDataset to_coco(const std::vector<SceneAnnotation>& scenes);

nlohmann::json coco_to_json(const CocoDataset& dataset);
CocoDataset coco_from_json(const nlohmann::json& j);

// Referential integrity: unique ids, every annotation references an existing
// image and category, bbox inside image bounds, area >= 1. Throws
// ValidationError with the first violation.
void validate_coco(const CocoDataset& dataset);

void write_coco_atomic(const std::filesystem::path& path, const CocoDataset& dataset);

} // namespace flakeforge
