#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flakeforge/image.hpp"
#include "flakeforge/library.hpp"
#include "flakeforge/optics.hpp"
#include "flakeforge/pia.hpp"
#include "flakeforge/rng.hpp"

namespace flakeforge {

// Layer-count classes: Mono = 1 layer, Few = 2-5, Thick = >5.
enum class LayerClass { Mono, Few, Thick };

LayerClass layer_class_of(int layer_count);
const char* layer_class_name(LayerClass c);

// Binary flake silhouette (row-major 0/1 bits, local coordinates).
struct FlakeMask {
    int width = 0, height = 0;
    std::vector<std::uint8_t> bits;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t area() const;
};

struct FlakeInstance {
    FlakeMask mask;
    int x = 0, y = 0;  // top-left placement in image coordinates
    std::string material_id;
    int layer_count = 0;
    double thickness_nm = 0.0;
    Rgb color;
    LayerClass layer_class = LayerClass::Mono;
    double contrast_delta_e = 0.0;  // vs the scene background color
};

struct MaterialSpec {
    std::string id;
    double weight = 1.0;
    double monolayer_nm = 0.65;
    // discrete layer-count distribution; defaults to uniform over 1..10
    std::vector<std::pair<int, double>> layer_distribution;
};

enum class WbMode { FromReference, Explicit, None };

struct SynthesisConfig {
    std::vector<MaterialSpec> materials;
    double oxide_nm = 180.0;
    int n_flakes = 30;
    int flake_min_px = 20, flake_max_px = 80;
    SpectralGrid grid{400.0, 700.0, 31};
    double substrate_percentile = 90.0;
    int max_retries = 100;
    int patch_px = 14;
    WbMode wb_mode = WbMode::FromReference;
    WbGain explicit_gain;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Mutable state while one scene is assembled.
struct SceneDraft {
    ImageF canvas;
    std::vector<std::uint8_t> occupied;  // row-major, true = taken by a placed flake
    std::vector<FlakeInstance> placed;

    explicit SceneDraft(ImageF image)
        : canvas(std::move(image)),
          occupied(static_cast<std::size_t>(canvas.width) * canvas.height, 0) {}
    bool is_occupied(int x, int y) const {
        return occupied[static_cast<std::size_t>(y) * canvas.width + x] != 0;
    }
};

struct SceneResult {
    Image8 image;                      // sRGB-encoded output
    ImageF canvas;                     // linear, pre-quantization
    std::vector<FlakeInstance> flakes; // placement order
    PiaMap attention;                  // map used for substrate detection
    SubstrateMask substrate;
    WbGain gain;
    int skipped_placements = 0;
};

// One 4-connected component shaped like an exfoliated flake: a radially
// jittered polygon rasterized into its bounding box. The tight bounding box
// of the result is within [min_px, max_px] in both dimensions.
FlakeMask random_flake_mask(Rng& rng, int min_px, int max_px);

struct ThicknessSample {
    int layer_count = 0;
    double thickness_nm = 0.0;
};

ThicknessSample sample_thickness(const std::string& material_id,
                                 const SynthesisConfig& config, Rng& rng);

// Optical color of {air | material(thickness) | SiO2(oxide) | Si} under the
// color system, with the white-balance gain applied afterwards.
Rgb flake_color(const std::string& material_id, double thickness_nm,
                const SynthesisConfig& config, const MaterialLibrary& materials,
                const ColorSystem& system, const WbGain& gain);

// Modeled clean-substrate color: {air | SiO2(oxide) | Si}, no gain.
Rgb bare_substrate_color(const SynthesisConfig& config, const MaterialLibrary& materials,
                         const ColorSystem& system);

// Gain aligning the modeled substrate color to the reference background.
WbGain wb_from_reference(const ImageF& reference, const SynthesisConfig& config,
                         const MaterialLibrary& materials, const ColorSystem& system);

// Rejection-samples a top-left position where every mask pixel lands on
// clean, unoccupied substrate; marks the occupancy on success. Returns
// nullopt after max_retries rejections (placement failure, not an error).
struct PixelPos {
    int x = 0, y = 0;
};
std::optional<PixelPos> place_flake(SceneDraft& draft, const FlakeMask& mask,
                                    const SubstrateMask& substrate, Rng& rng,
                                    int max_retries);

// Hard replacement under the mask; pixels outside the mask are untouched.
void composite(ImageF& canvas, const FlakeMask& mask, int x, int y, const Rgb& color);

// Full pipeline for one scene: white balance, substrate detection, then the
// sample/place/color/composite loop. Deterministic for a fixed config seed;
// crowded scenes degrade to fewer flakes instead of failing.
SceneResult synthesize_scene(const ImageF& reference, const SynthesisConfig& config,
                             const MaterialLibrary& materials, const ColorSystem& system);

} // namespace flakeforge
