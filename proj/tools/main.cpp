// flakeforge: physics-based synthetic microscopy dataset generator for
// thin 2D material flakes. Subcommands: spectrum, color, pia, calibrate,
// dataset. Exit codes: 0 success, 1 usage error, 2 data/validation error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flakeforge/coco.hpp"
#include "flakeforge/dataset.hpp"
#include "flakeforge/error.hpp"
#include "flakeforge/image.hpp"
#include "flakeforge/library.hpp"
#include "flakeforge/optics.hpp"
#include "flakeforge/pia.hpp"
#include "flakeforge/qa.hpp"
#include "flakeforge/synthesis.hpp"

namespace ff = flakeforge;

namespace {

struct StackFlags {
    std::string material = "mos2";
    int layers = 1;
    double thickness_nm = 0.0;  // 0 = derive from layers * monolayer
    double monolayer_nm = 0.65;
    double oxide_nm = 180.0;
};

struct GridFlags {
    double lambda_min = 400.0;
    double lambda_max = 700.0;
    int samples = 31;
};

void add_stack_flags(CLI::App* cmd, StackFlags& f) {
    cmd->add_option("--material", f.material,
                    "flake material id ('sio2_only' or 'none' = bare substrate)")
        ->capture_default_str();
    cmd->add_option("--layers", f.layers, "layer count (0 = bare substrate)")
        ->capture_default_str();
    cmd->add_option("--thickness-nm", f.thickness_nm,
                    "explicit flake thickness, overrides --layers");
    cmd->add_option("--monolayer-nm", f.monolayer_nm, "single-layer thickness")
        ->capture_default_str();
    cmd->add_option("--oxide-nm", f.oxide_nm, "SiO2 thickness")->capture_default_str();
}

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--lambda-min", g.lambda_min, "grid start, nm")->capture_default_str();
    cmd->add_option("--lambda-max", g.lambda_max, "grid end, nm")->capture_default_str();
    cmd->add_option("--samples", g.samples, "grid sample count")->capture_default_str();
}

bool is_bare(const StackFlags& f) {
    return f.material == "sio2_only" || f.material == "none" ||
           (f.layers == 0 && f.thickness_nm <= 0.0);
}

double flake_thickness(const StackFlags& f) {
    return f.thickness_nm > 0.0 ? f.thickness_nm : f.layers * f.monolayer_nm;
}

ff::LayerStack build_stack(const StackFlags& f, const ff::MaterialLibrary& lib) {
    ff::LayerStack stack;
    stack.incident = &lib.get("air");
    if (!is_bare(f))
        stack.layers.push_back({&lib.get(f.material), flake_thickness(f)});
    stack.layers.push_back({&lib.get("sio2"), f.oxide_nm});
    stack.substrate = &lib.get("si");
    return stack;
}

ff::ColorSystem load_system(const std::filesystem::path& data_dir, const ff::SpectralGrid& grid) {
    return ff::load_color_system(data_dir / "colorsystem_srgb_d65.json", grid);
}

std::string rgb_text(const ff::Rgb& c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.6f, %.6f, %.6f)", c.r, c.g, c.b);
    return buf;
}

std::string hex_text(const ff::Rgb& c) {
    const auto d = ff::srgb_encode(c);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(std::clamp(d[0], 0.0, 255.0))),
                  static_cast<int>(std::lround(std::clamp(d[1], 0.0, 255.0))),
                  static_cast<int>(std::lround(std::clamp(d[2], 0.0, 255.0))));
    return buf;
}

std::string lab_text(const ff::Lab& c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(L* %.3f, a* %.3f, b* %.3f)", c.l, c.a, c.b);
    return buf;
}

int cmd_spectrum(const StackFlags& stack_flags, const GridFlags& grid_flags,
                 const std::filesystem::path& data_dir, const std::filesystem::path& out) {
    const auto lib = ff::MaterialLibrary::load_directory(data_dir / "materials");
    const ff::SpectralGrid grid(grid_flags.lambda_min, grid_flags.lambda_max, grid_flags.samples);
    const auto stack = build_stack(stack_flags, lib);
    const auto curve = ff::reflectance_spectrum(stack, grid);

    std::ofstream f(out);
    if (!f) throw ff::IoError("cannot open " + out.string() + " for writing");
    f << "wavelength_nm,R\n";
    char buf[64];
    for (int i = 0; i < grid.count; ++i) {
        std::snprintf(buf, sizeof buf, "%.6f,%.9f", grid.at(i),
                      curve.values[static_cast<std::size_t>(i)]);
        f << buf << "\n";
    }
    const auto [lo, hi] = std::minmax_element(curve.values.begin(), curve.values.end());
    std::printf("wrote %s: %d samples, R in [%.6f, %.6f]\n", out.string().c_str(), grid.count,
                *lo, *hi);
    return 0;
}

int cmd_color(const StackFlags& stack_flags, const GridFlags& grid_flags,
              const std::filesystem::path& data_dir, const std::vector<double>& wb,
              const std::string& wb_from) {
    const auto lib = ff::MaterialLibrary::load_directory(data_dir / "materials");
    const ff::SpectralGrid grid(grid_flags.lambda_min, grid_flags.lambda_max, grid_flags.samples);
    const auto system = load_system(data_dir, grid);

    StackFlags bare_flags = stack_flags;
    bare_flags.material = "none";
    bare_flags.layers = 0;
    bare_flags.thickness_nm = 0.0;
    const auto bare = build_stack(bare_flags, lib);
    const ff::Rgb substrate =
        ff::xyz_to_linear_rgb(ff::spectrum_to_xyz(ff::reflectance_spectrum(bare, grid), system),
                              system);

    ff::WbGain gain;
    if (!wb.empty()) {
        gain = {wb[0], wb[1], wb[2]};
    } else if (!wb_from.empty()) {
        const auto reference = ff::decode_srgb_image(ff::read_png(wb_from));
        const ff::Rgb c_ref = ff::estimate_background(reference);
        gain = ff::wb_gain(c_ref, substrate, false);
    }

    ff::Rgb flake = substrate;
    if (!is_bare(stack_flags)) {
        const auto stack = build_stack(stack_flags, lib);
        flake = ff::xyz_to_linear_rgb(
            ff::spectrum_to_xyz(ff::reflectance_spectrum(stack, grid), system), system);
    }
    const ff::Rgb flake_wb = ff::apply_wb(flake, gain);
    const ff::Rgb substrate_wb = ff::apply_wb(substrate, gain);

    const ff::Lab flake_lab = ff::rgb_to_lab(flake_wb, system);
    const ff::Lab substrate_lab = ff::rgb_to_lab(substrate_wb, system);
    std::printf("flake:     linear %s  sRGB %s  Lab %s\n", rgb_text(flake_wb).c_str(),
                hex_text(flake_wb).c_str(), lab_text(flake_lab).c_str());
    std::printf("substrate: linear %s  sRGB %s  Lab %s\n", rgb_text(substrate_wb).c_str(),
                hex_text(substrate_wb).c_str(), lab_text(substrate_lab).c_str());
    std::printf("delta_e: %.6f\n", ff::delta_e(flake_lab, substrate_lab));
    return 0;
}

int cmd_pia(const std::filesystem::path& input, int patch, double percentile,
            const std::filesystem::path& data_dir, std::filesystem::path map_out,
            const std::filesystem::path& mask_out, const std::filesystem::path& csv_out) {
    const ff::SpectralGrid grid;
    const auto system = load_system(data_dir, grid);
    const auto image = ff::decode_srgb_image(ff::read_png(input));

    const auto sheet = ff::patch_scores(image, patch, patch, system);
    const auto map = ff::pia_map(image, patch, patch, system);

    if (map_out.empty()) {
        map_out = input;
        map_out.replace_extension();
        map_out += "_pia.png";
    }
    ff::Image8 gray(map.width, map.height, 1);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            gray.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(255.0 * map.at(x, y)));
    ff::write_png_atomic(map_out, gray);
    std::printf("wrote %s (%dx%d, %dx%d patches)\n", map_out.string().c_str(), map.width,
                map.height, sheet.patch_cols, sheet.patch_rows);

    if (!mask_out.empty()) {
        const auto mask = ff::substrate_mask(map, percentile);
        ff::Image8 bits(mask.width, mask.height, 1);
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                bits.at(x, y, 0) = mask.at(x, y) ? 255 : 0;
        ff::write_png_atomic(mask_out, bits);
        std::printf("wrote %s (threshold %.6f at percentile %.1f)\n", mask_out.string().c_str(),
                    mask.threshold, percentile);
    }

    if (!csv_out.empty()) {
        double lo = sheet.scores.front().score, hi = lo;
        for (const auto& s : sheet.scores) {
            lo = std::min(lo, s.score);
            hi = std::max(hi, s.score);
        }
        const double span = hi - lo;
        std::ofstream f(csv_out);
        if (!f) throw ff::IoError("cannot open " + csv_out.string() + " for writing");
        f << "patch_row,patch_col,delta_e,normalized\n";
        char buf[96];
        for (const auto& s : sheet.scores) {
            const double norm = span > 1e-12 ? (s.score - lo) / span : 0.0;
            std::snprintf(buf, sizeof buf, "%d,%d,%.9f,%.9f", s.row, s.col, s.score, norm);
            f << buf << "\n";
        }
        std::printf("wrote %s (%zu patches)\n", csv_out.string().c_str(), sheet.scores.size());
    }
    return 0;
}

int cmd_calibrate(const std::filesystem::path& reference_path, double oxide_nm, bool normalize,
                  const std::filesystem::path& data_dir) {
    const auto lib = ff::MaterialLibrary::load_directory(data_dir / "materials");
    const ff::SpectralGrid grid;
    const auto system = load_system(data_dir, grid);
    const auto reference = ff::decode_srgb_image(ff::read_png(reference_path));

    ff::SynthesisConfig cfg;
    cfg.materials.push_back({"mos2", 1.0, 0.65, {}});
    cfg.oxide_nm = oxide_nm;
    const ff::Rgb modeled = ff::bare_substrate_color(cfg, lib, system);
    const ff::Rgb measured = ff::estimate_background(reference);
    const ff::WbGain gain = ff::wb_gain(measured, modeled, normalize);

    std::printf("reference substrate (linear): %s\n", rgb_text(measured).c_str());
    std::printf("modeled substrate   (linear): %s\n", rgb_text(modeled).c_str());
    std::printf("gain: (%.9f, %.9f, %.9f)\n", gain.r, gain.g, gain.b);
    return 0;
}

int cmd_dataset(const std::filesystem::path& config_path, const std::filesystem::path& data_dir,
                int jobs) {
    auto cfg = ff::load_run_config(config_path);
    if (jobs > 0) cfg.jobs = jobs;
    const auto lib = ff::MaterialLibrary::load_directory(data_dir / "materials");
    const auto system = load_system(data_dir, cfg.synth.grid);
    const auto summary = ff::run_dataset(cfg, lib, system);
    for (const auto& s : summary.scenes)
        std::printf("%s: %d flakes (%d skipped) from %s\n", s.image_file.c_str(), s.flakes,
                    s.skipped, s.reference_file.c_str());
    std::printf("done: %zu scenes, %d flakes, %d skipped -> %s\n", summary.scenes.size(),
                summary.total_flakes, summary.total_skipped, cfg.output_dir.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"physics-based synthetic 2D-flake microscopy dataset generator"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global flags like --data-dir after the subcommand

    std::filesystem::path data_dir = "data";
    app.add_option("--data-dir", data_dir, "directory with materials/, cie/ and the color system")
        ->capture_default_str();

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "write a reflectance spectrum CSV");
    StackFlags sp_stack;
    GridFlags sp_grid;
    std::filesystem::path sp_out = "spectrum.csv";
    add_stack_flags(spectrum, sp_stack);
    add_grid_flags(spectrum, sp_grid);
    spectrum->add_option("--out", sp_out, "output CSV path")->capture_default_str();

    // color
    auto* color = app.add_subcommand("color", "report flake and substrate colors");
    StackFlags co_stack;
    GridFlags co_grid;
    std::vector<double> co_wb;
    std::string co_wb_from;
    add_stack_flags(color, co_stack);
    add_grid_flags(color, co_grid);
    color->add_option("--wb-gain", co_wb, "explicit white-balance gain r g b")->expected(3);
    color->add_option("--wb-from", co_wb_from, "estimate white balance from a reference image");

    // pia
    auto* pia = app.add_subcommand("pia", "compute the perceptual attention map of an image");
    std::filesystem::path pia_input, pia_map_out, pia_mask_out, pia_csv_out;
    int pia_patch = 14;
    double pia_percentile = 90.0;
    pia->add_option("input", pia_input, "8-bit RGB image")->required();
    pia->add_option("--patch", pia_patch, "patch size in pixels")->capture_default_str();
    pia->add_option("--percentile", pia_percentile, "substrate threshold percentile")
        ->capture_default_str();
    pia->add_option("--map-out", pia_map_out, "grayscale map PNG (default <input>_pia.png)");
    pia->add_option("--mask-out", pia_mask_out, "substrate mask PNG");
    pia->add_option("--csv-out", pia_csv_out, "per-patch score CSV");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "estimate white-balance gain from a reference");
    std::filesystem::path cal_reference;
    double cal_oxide = 180.0;
    bool cal_normalize = false;
    calibrate->add_option("reference", cal_reference, "reference microscopy image")->required();
    calibrate->add_option("--oxide-nm", cal_oxide, "SiO2 thickness")->capture_default_str();
    calibrate->add_flag("--normalize", cal_normalize, "rescale so the mean gain is 1");

    // dataset
    auto* dataset = app.add_subcommand("dataset", "generate an annotated dataset from a config");
    std::filesystem::path ds_config;
    int ds_jobs = 0;
    dataset->add_option("config", ds_config, "dataset config JSON")->required();
    dataset->add_option("--jobs", ds_jobs, "worker threads (0 = hardware)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(spectrum))
            return cmd_spectrum(sp_stack, sp_grid, data_dir, sp_out);
        if (app.got_subcommand(color))
            return cmd_color(co_stack, co_grid, data_dir, co_wb, co_wb_from);
        if (app.got_subcommand(pia))
            return cmd_pia(pia_input, pia_patch, pia_percentile, data_dir, pia_map_out,
                           pia_mask_out, pia_csv_out);
        if (app.got_subcommand(calibrate))
            return cmd_calibrate(cal_reference, cal_oxide, cal_normalize, data_dir);
        if (app.got_subcommand(dataset))
            return cmd_dataset(ds_config, data_dir, ds_jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
