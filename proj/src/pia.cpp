#include "flakeforge/pia.hpp"

#include <algorithm>
#include <cmath>

#include "flakeforge/error.hpp"

namespace flakeforge {

namespace {

// Lower median of the channel values in a pixel window.
Rgb window_median(const ImageF& image, int x0, int y0, int w, int h) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t mid = (n - 1) / 2;
    std::vector<double> channel(n);
    Rgb med;
    for (int c = 0; c < 3; ++c) {
        std::size_t i = 0;
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x)
                channel[i++] = image.at(x, y)[c];
        std::nth_element(channel.begin(), channel.begin() + static_cast<std::ptrdiff_t>(mid),
                         channel.end());
        med[c] = channel[mid];
    }
    return med;
}

} // namespace

PatchScoreSheet patch_scores(const ImageF& image, int patch_height, int patch_width,
                             const ColorSystem& system,
                             std::optional<RoiRect> background_roi) {
    if (image.empty()) throw DomainError("patch_scores: empty image");
    if (patch_height < 1 || patch_height > image.height ||
        patch_width < 1 || patch_width > image.width)
        throw DomainError("patch_scores: patch size outside [1, image size]");

    Rgb background;
    if (background_roi) {
        const auto& r = *background_roi;
        if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 ||
            r.x + r.width > image.width || r.y + r.height > image.height)
            throw DomainError("patch_scores: background ROI outside image");
        background = window_median(image, r.x, r.y, r.width, r.height);
    } else {
        background = estimate_background(image);
    }
    const Lab background_lab = rgb_to_lab(background, system);

    PatchScoreSheet sheet;
    sheet.patch_width = patch_width;
    sheet.patch_height = patch_height;
    sheet.patch_cols = (image.width + patch_width - 1) / patch_width;
    sheet.patch_rows = (image.height + patch_height - 1) / patch_height;
    sheet.scores.reserve(static_cast<std::size_t>(sheet.patch_rows) * sheet.patch_cols);

    for (int pr = 0; pr < sheet.patch_rows; ++pr) {
        for (int pc = 0; pc < sheet.patch_cols; ++pc) {
            PatchScore s;
            s.row = pr;
            s.col = pc;
            s.x = pc * patch_width;
            s.y = pr * patch_height;
            s.width = std::min(patch_width, image.width - s.x);
            s.height = std::min(patch_height, image.height - s.y);
            const Rgb med = window_median(image, s.x, s.y, s.width, s.height);
            s.score = delta_e(rgb_to_lab(med, system), background_lab);
            sheet.scores.push_back(s);
        }
    }
    return sheet;
}

PiaMap pia_map(const ImageF& image, int patch_height, int patch_width,
               const ColorSystem& system,
               std::optional<RoiRect> background_roi) {
    const auto sheet = patch_scores(image, patch_height, patch_width, system, background_roi);

    double lo = sheet.scores.front().score, hi = lo;
    for (const auto& s : sheet.scores) {
        lo = std::min(lo, s.score);
        hi = std::max(hi, s.score);
    }

    PiaMap map;
    map.width = image.width;
    map.height = image.height;
    map.patch_width = patch_width;
    map.patch_height = patch_height;
    map.values.assign(static_cast<std::size_t>(image.width) * image.height, 0.0);

    const double span = hi - lo;
    if (span > 1e-12) {  // degenerate maps stay all-zero
        for (const auto& s : sheet.scores) {
            const double v = (s.score - lo) / span;
            for (int y = s.y; y < s.y + s.height; ++y)
                for (int x = s.x; x < s.x + s.width; ++x)
                    map.values[static_cast<std::size_t>(y) * map.width + x] = v;
        }
    }
    return map;
}

SubstrateMask substrate_mask(const PiaMap& map, double percentile) {
    if (!(percentile > 0.0 && percentile < 100.0))
        throw DomainError("substrate_mask: percentile must be in (0, 100)");

    SubstrateMask mask;
    mask.width = map.width;
    mask.height = map.height;
    mask.percentile = percentile;
    mask.bits.assign(map.values.size(), 0);

    const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
    if (*hi_it - *lo_it <= 0.0) {  // featureless map: everything is substrate
        mask.threshold = *hi_it;
        std::fill(mask.bits.begin(), mask.bits.end(), 1);
        return mask;
    }

    // Nearest-rank threshold. With strict (< tau) selection the rank must sit
    // just above the p% boundary, otherwise a run of ties at the boundary
    // (e.g. 90% zeros) selects nothing: rank = floor(p/100 * N) + 1, clamped.
    const std::size_t n = map.values.size();
    std::vector<double> sorted(map.values);
    const std::size_t rank = std::min(
        n, static_cast<std::size_t>(std::floor(percentile / 100.0 * static_cast<double>(n))) + 1);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    mask.threshold = sorted[rank - 1];

    for (std::size_t i = 0; i < n; ++i)
        mask.bits[i] = map.values[i] < mask.threshold ? 1 : 0;
    return mask;
}

} // namespace flakeforge
