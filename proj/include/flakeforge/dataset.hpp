#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flakeforge/color.hpp"
#include "flakeforge/library.hpp"
#include "flakeforge/synthesis.hpp"

namespace flakeforge {

// Batch run description, parsed from the dataset config JSON. Relative
// reference/output paths are resolved against the config file's directory.
struct RunConfig {
    SynthesisConfig synth;
    std::filesystem::path reference_dir;
    std::filesystem::path output_dir;
    int n_images = 1;
    int jobs = 0;  // 0 = one worker per hardware thread
    std::uint64_t config_hash = 0;  // FNV-1a of the config file bytes
};

RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size);

struct SceneReport {
    std::string image_file;      // relative to output_dir
    std::string reference_file;  // basename of the source reference
    int flakes = 0;
    int skipped = 0;
};

struct RunSummary {
    std::vector<SceneReport> scenes;
    int total_flakes = 0;
    int total_skipped = 0;
};

// Synthesizes n_images scenes (scene i seeded with mix_seed(seed, i), so the
// output is independent of worker scheduling) and writes the dataset tree:
//   images/scene_#####.png   sRGB scenes
//   masks/scene_#####.png    8-bit flake-index sidecars (0 = background)
//   annotations.json         COCO detection annotations
//   instructions.jsonl       instruction QA records
//   run_manifest.json        config hash, seed, per-scene counts
RunSummary run_dataset(const RunConfig& config, const MaterialLibrary& materials,
                       const ColorSystem& system);

} // namespace flakeforge
