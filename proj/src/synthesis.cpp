#include "flakeforge/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "flakeforge/error.hpp"

namespace flakeforge {

LayerClass layer_class_of(int layer_count) {
    if (layer_count < 1) throw DomainError("layer count must be >= 1");
    if (layer_count == 1) return LayerClass::Mono;
    if (layer_count <= 5) return LayerClass::Few;
    return LayerClass::Thick;
}

const char* layer_class_name(LayerClass c) {
    switch (c) {
        case LayerClass::Mono: return "Mono";
        case LayerClass::Few: return "Few";
        case LayerClass::Thick: return "Thick";
    }
    return "?";
}

std::size_t FlakeMask::area() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

void SynthesisConfig::validate() const {
    if (materials.empty()) throw ConfigError("config: at least one material required");
    for (const auto& m : materials) {
        if (m.id.empty()) throw ConfigError("config: material with empty id");
        if (!(m.weight > 0.0)) throw ConfigError("config: material weight must be > 0: " + m.id);
        if (!(m.monolayer_nm > 0.0))
            throw ConfigError("config: monolayer_nm must be > 0: " + m.id);
        for (const auto& [count, weight] : m.layer_distribution) {
            if (count < 1) throw ConfigError("config: layer count must be >= 1: " + m.id);
            if (!(weight > 0.0))
                throw ConfigError("config: layer distribution weight must be > 0: " + m.id);
        }
    }
    if (!(oxide_nm > 0.0)) throw ConfigError("config: oxide_nm must be > 0");
    if (n_flakes < 0) throw ConfigError("config: n_flakes must be >= 0");
    if (n_flakes > 255) throw ConfigError("config: n_flakes must be <= 255 (8-bit mask sidecar)");
    if (flake_min_px < 4) throw ConfigError("config: flake_px minimum is 4");
    if (flake_max_px < flake_min_px) throw ConfigError("config: flake_px range inverted");
    if (!(substrate_percentile > 0.0 && substrate_percentile < 100.0))
        throw ConfigError("config: substrate_percentile must be in (0, 100)");
    if (max_retries < 1) throw ConfigError("config: max_retries must be >= 1");
    if (patch_px < 1) throw ConfigError("config: patch_px must be >= 1");
    if (wb_mode == WbMode::Explicit &&
        !(explicit_gain.r > 0.0 && explicit_gain.g > 0.0 && explicit_gain.b > 0.0))
        throw ConfigError("config: explicit white-balance gain must be positive");
}

namespace {

struct Point {
    double x, y;
};

// Even-odd scanline fill sampled at pixel centers.
std::vector<std::uint8_t> rasterize_polygon(const std::vector<Point>& poly, int w, int h) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
    std::vector<double> xs;
    for (int y = 0; y < h; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Point& a = poly[i];
            const Point& b = poly[(i + 1) % poly.size()];
            if ((a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc)) {
                const double t = (yc - a.y) / (b.y - a.y);
                xs.push_back(a.x + t * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int xa = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            const int xb = std::min(w - 1, static_cast<int>(std::floor(xs[i + 1] - 0.5)));
            for (int x = xa; x <= xb; ++x)
                bits[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }
    return bits;
}

// Keeps only the largest 4-connected component.
void keep_largest_component(std::vector<std::uint8_t>& bits, int w, int h) {
    std::vector<int> label(bits.size(), 0);
    int next = 0;
    std::size_t best_size = 0;
    int best_label = 0;
    std::queue<std::pair<int, int>> frontier;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (!bits[si] || label[si]) continue;
            const int id = ++next;
            std::size_t size = 0;
            label[si] = id;
            frontier.push({sx, sy});
            while (!frontier.empty()) {
                auto [x, y] = frontier.front();
                frontier.pop();
                ++size;
                constexpr int dx[] = {1, -1, 0, 0};
                constexpr int dy[] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int nx = x + dx[d], ny = y + dy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (bits[ni] && !label[ni]) {
                        label[ni] = id;
                        frontier.push({nx, ny});
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best_label = id;
            }
        }
    }
    for (std::size_t i = 0; i < bits.size(); ++i)
        bits[i] = (bits[i] && label[i] == best_label) ? 1 : 0;
}

// Crop to the tight bounding box of true bits; empty input stays empty.
FlakeMask crop_tight(const std::vector<std::uint8_t>& bits, int w, int h) {
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (bits[static_cast<std::size_t>(y) * w + x]) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    FlakeMask mask;
    if (x1 < 0) return mask;
    mask.width = x1 - x0 + 1;
    mask.height = y1 - y0 + 1;
    mask.bits.resize(static_cast<std::size_t>(mask.width) * mask.height);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            mask.bits[static_cast<std::size_t>(y) * mask.width + x] =
                bits[static_cast<std::size_t>(y + y0) * w + (x + x0)];
    return mask;
}

FlakeMask filled_ellipse(int w, int h) {
    FlakeMask mask;
    mask.width = w;
    mask.height = h;
    mask.bits.assign(static_cast<std::size_t>(w) * h, 0);
    const double a = w / 2.0, b = h / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5 - a) / a;
            const double dy = (y + 0.5 - b) / b;
            if (dx * dx + dy * dy <= 1.0)
                mask.bits[static_cast<std::size_t>(y) * w + x] = 1;
        }
    return mask;
}

} // namespace

FlakeMask random_flake_mask(Rng& rng, int min_px, int max_px) {
    if (min_px < 4 || max_px < min_px)
        throw DomainError("random_flake_mask: degenerate size range");

    int target_w = static_cast<int>(rng.uniform_int(min_px, max_px));
    int target_h = static_cast<int>(rng.uniform_int(min_px, max_px));

    // Radially jittered polygon on a unit circle; aspect comes from the
    // target box. Angle jitter stays below half a sector so the polygon
    // remains star-shaped (simple), which keeps the fill to one component.
    const int vertex_count = static_cast<int>(rng.uniform_int(8, 16));
    std::vector<Point> unit(static_cast<std::size_t>(vertex_count));
    for (int k = 0; k < vertex_count; ++k) {
        const double theta =
            2.0 * std::numbers::pi * (k + rng.uniform(-0.3, 0.3)) / vertex_count;
        const double rho = 1.0 + rng.uniform(-0.35, 0.35);
        unit[static_cast<std::size_t>(k)] = {std::cos(theta) * rho, std::sin(theta) * rho};
    }

    for (int attempt = 0; attempt < 3; ++attempt) {
        // stretch the polygon to span exactly [0, w] x [0, h]
        double x0 = unit[0].x, x1 = unit[0].x, y0 = unit[0].y, y1 = unit[0].y;
        for (const auto& p : unit) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        std::vector<Point> poly(unit.size());
        for (std::size_t i = 0; i < unit.size(); ++i)
            poly[i] = {(unit[i].x - x0) / (x1 - x0) * target_w,
                       (unit[i].y - y0) / (y1 - y0) * target_h};

        auto bits = rasterize_polygon(poly, target_w, target_h);
        keep_largest_component(bits, target_w, target_h);
        FlakeMask mask = crop_tight(bits, target_w, target_h);
        if (mask.width >= min_px && mask.height >= min_px && mask.area() > 0)
            return mask;

        // rasterization trimmed below the minimum: grow the target and retry
        target_w = std::min(max_px, target_w + std::max(1, min_px - mask.width));
        target_h = std::min(max_px, target_h + std::max(1, min_px - mask.height));
    }
    return filled_ellipse(target_w, target_h);  // tight box equals the target box
}

ThicknessSample sample_thickness(const std::string& material_id,
                                 const SynthesisConfig& config, Rng& rng) {
    const MaterialSpec* spec = nullptr;
    for (const auto& m : config.materials)
        if (m.id == material_id) {
            spec = &m;
            break;
        }
    if (!spec) throw ConfigError("sample_thickness: material not in config: " + material_id);

    int layers;
    if (spec->layer_distribution.empty()) {
        layers = static_cast<int>(rng.uniform_int(1, 10));
    } else {
        std::vector<double> weights;
        weights.reserve(spec->layer_distribution.size());
        for (const auto& [count, weight] : spec->layer_distribution) weights.push_back(weight);
        layers = spec->layer_distribution[rng.weighted_index(weights)].first;
    }
    return {layers, layers * spec->monolayer_nm};
}

Rgb flake_color(const std::string& material_id, double thickness_nm,
                const SynthesisConfig& config, const MaterialLibrary& materials,
                const ColorSystem& system, const WbGain& gain) {
    if (!(thickness_nm > 0.0)) throw DomainError("flake_color: thickness must be > 0");
    LayerStack stack;
    stack.incident = &materials.get("air");
    stack.layers = {{&materials.get(material_id), thickness_nm},
                    {&materials.get("sio2"), config.oxide_nm}};
    stack.substrate = &materials.get("si");
    const auto spectrum = reflectance_spectrum(stack, config.grid);
    return apply_wb(xyz_to_linear_rgb(spectrum_to_xyz(spectrum, system), system), gain);
}

Rgb bare_substrate_color(const SynthesisConfig& config, const MaterialLibrary& materials,
                         const ColorSystem& system) {
    LayerStack stack;
    stack.incident = &materials.get("air");
    stack.layers = {{&materials.get("sio2"), config.oxide_nm}};
    stack.substrate = &materials.get("si");
    const auto spectrum = reflectance_spectrum(stack, config.grid);
    return xyz_to_linear_rgb(spectrum_to_xyz(spectrum, system), system);
}

WbGain wb_from_reference(const ImageF& reference, const SynthesisConfig& config,
                         const MaterialLibrary& materials, const ColorSystem& system) {
    if (reference.empty()) throw DomainError("wb_from_reference: empty reference");
    const Rgb c_ref = estimate_background(reference);
    const Rgb c_0 = bare_substrate_color(config, materials, system);
    return wb_gain(c_ref, c_0, /*normalize=*/false);
}

std::optional<PixelPos> place_flake(SceneDraft& draft, const FlakeMask& mask,
                                    const SubstrateMask& substrate, Rng& rng,
                                    int max_retries) {
    const int W = draft.canvas.width, H = draft.canvas.height;
    if (mask.width > W || mask.height > H)
        throw DomainError("place_flake: mask larger than canvas");
    if (substrate.width != W || substrate.height != H)
        throw ShapeError("place_flake: substrate mask size mismatch");

    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const int u = static_cast<int>(rng.uniform_int(0, W - mask.width));
        const int v = static_cast<int>(rng.uniform_int(0, H - mask.height));
        bool ok = true;
        for (int y = 0; y < mask.height && ok; ++y)
            for (int x = 0; x < mask.width; ++x) {
                if (!mask.at(x, y)) continue;
                if (!substrate.at(u + x, v + y) || draft.is_occupied(u + x, v + y)) {
                    ok = false;
                    break;
                }
            }
        if (!ok) continue;
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                if (mask.at(x, y))
                    draft.occupied[static_cast<std::size_t>(v + y) * W + (u + x)] = 1;
        return PixelPos{u, v};
    }
    return std::nullopt;
}

void composite(ImageF& canvas, const FlakeMask& mask, int x, int y, const Rgb& color) {
    if (x < 0 || y < 0 || x + mask.width > canvas.width || y + mask.height > canvas.height)
        throw DomainError("composite: mask window outside canvas");
    for (int my = 0; my < mask.height; ++my)
        for (int mx = 0; mx < mask.width; ++mx)
            if (mask.at(mx, my)) canvas.at(x + mx, y + my) = color;
}

SceneResult synthesize_scene(const ImageF& reference, const SynthesisConfig& config,
                             const MaterialLibrary& materials, const ColorSystem& system) {
    config.validate();
    if (reference.empty()) throw DomainError("synthesize_scene: empty reference image");
    if (config.flake_max_px > std::min(reference.width, reference.height))
        throw ConfigError("config: flake_px maximum exceeds reference image size");

    SceneResult result;
    ImageF canvas = reference;
    switch (config.wb_mode) {
        case WbMode::FromReference:
            result.gain = wb_from_reference(reference, config, materials, system);
            break;
        case WbMode::Explicit:
            result.gain = config.explicit_gain;
            canvas = apply_wb(canvas, result.gain);
            break;
        case WbMode::None:
            break;
    }

    result.attention = pia_map(canvas, config.patch_px, config.patch_px, system);
    result.substrate = substrate_mask(result.attention, config.substrate_percentile);

    Rng rng(config.seed);
    SceneDraft draft(std::move(canvas));

    const Rgb scene_background = estimate_background(draft.canvas);
    const Lab background_lab = rgb_to_lab(scene_background, system);
    std::vector<double> weights;
    weights.reserve(config.materials.size());
    for (const auto& m : config.materials) weights.push_back(m.weight);

    for (int i = 0; i < config.n_flakes; ++i) {
        FlakeMask mask = random_flake_mask(rng, config.flake_min_px, config.flake_max_px);
        const MaterialSpec& mat = config.materials[rng.weighted_index(weights)];
        const ThicknessSample t = sample_thickness(mat.id, config, rng);
        const auto pos = place_flake(draft, mask, result.substrate, rng, config.max_retries);
        if (!pos) {
            ++result.skipped_placements;
            continue;
        }
        const Rgb color = flake_color(mat.id, t.thickness_nm, config, materials, system,
                                      result.gain);
        composite(draft.canvas, mask, pos->x, pos->y, color);

        FlakeInstance inst;
        inst.mask = std::move(mask);
        inst.x = pos->x;
        inst.y = pos->y;
        inst.material_id = mat.id;
        inst.layer_count = t.layer_count;
        inst.thickness_nm = t.thickness_nm;
        inst.color = color;
        inst.layer_class = layer_class_of(t.layer_count);
        inst.contrast_delta_e = delta_e(rgb_to_lab(color, system), background_lab);
        draft.placed.push_back(std::move(inst));
    }

    result.image = encode_srgb_image(draft.canvas);
    result.canvas = std::move(draft.canvas);
    result.flakes = std::move(draft.placed);
    return result;
}

} // namespace flakeforge
