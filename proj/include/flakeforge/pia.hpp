#pragma once

#include <optional>
#include <vector>

#include "flakeforge/image.hpp"

namespace flakeforge {

// Patch geometry plus its perceptual contrast against the image background.
// Edge patches keep their actual (smaller) extent; nothing is padded.
struct PatchScore {
    int row = 0, col = 0;      // patch indices
    int x = 0, y = 0;          // top-left pixel
    int width = 0, height = 0; // actual extent
    double score = 0.0;        // delta-E of patch median vs background
};

struct PatchScoreSheet {
    int patch_rows = 0, patch_cols = 0;
    int patch_width = 0, patch_height = 0;  // nominal size
    std::vector<PatchScore> scores;          // row-major
};

// Per-pixel attention values in [0, 1], constant within each patch.
struct PiaMap {
    int width = 0, height = 0;
    int patch_width = 0, patch_height = 0;
    std::vector<double> values;  // row-major, width*height

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// true = clean substrate, eligible for synthetic placement.
struct SubstrateMask {
    int width = 0, height = 0;
    double threshold = 0.0;    // tau
    double percentile = 90.0;
    std::vector<std::uint8_t> bits;  // row-major, 0/1

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

// Background region of interest; defaults to the whole image when absent.
struct RoiRect {
    int x = 0, y = 0, width = 0, height = 0;
};

// Patch-wise perceptual contrast: per patch, the per-channel median color is
// converted to Lab and scored by its delta-E against the image background
// (per-channel median over the full image or the ROI).
PatchScoreSheet patch_scores(const ImageF& image, int patch_height, int patch_width,
                             const ColorSystem& system,
                             std::optional<RoiRect> background_roi = std::nullopt);

// Scores broadcast to pixels, then min-max normalized to [0, 1].
// A degenerate map (max - min below 1e-12) becomes all zeros.
PiaMap pia_map(const ImageF& image, int patch_height, int patch_width,
               const ColorSystem& system,
               std::optional<RoiRect> background_roi = std::nullopt);

// tau = nearest-rank percentile of map values; substrate where value < tau
// (ties excluded). An all-equal map yields an all-substrate mask.
SubstrateMask substrate_mask(const PiaMap& map, double percentile);

} // namespace flakeforge
