#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "flakeforge/color.hpp"
#include "flakeforge/image.hpp"
#include "flakeforge/library.hpp"
#include "flakeforge/optics.hpp"

#include "oracles.hpp"

namespace helpers {

inline std::filesystem::path data_dir() { return FF_DATA_DIR; }

inline flakeforge::ColorSystem load_d65_system(
    const flakeforge::SpectralGrid& grid = flakeforge::SpectralGrid()) {
    return flakeforge::load_color_system(data_dir() / "colorsystem_srgb_d65.json", grid);
}

// Same CMF and matrix, equal-energy illuminant.
inline flakeforge::ColorSystem load_e_system(
    const flakeforge::SpectralGrid& grid = flakeforge::SpectralGrid()) {
    using namespace flakeforge;
    const auto d65 = load_color_system(data_dir() / "colorsystem_srgb_d65.json", grid);
    const auto cmf = load_cmf(data_dir() / "cie" / "cmf_1931_2deg.csv");
    const auto ill = load_illuminant(data_dir() / "cie" / "illuminant_e.csv");
    return ColorSystem(sample_curve(cmf.lambda, cmf.xbar, grid),
                       sample_curve(cmf.lambda, cmf.ybar, grid),
                       sample_curve(cmf.lambda, cmf.zbar, grid),
                       sample_curve(ill.lambda, ill.power, grid),
                       d65.xyz_to_rgb_matrix(), Xyz{1.0, 1.0, 1.0});
}

inline const flakeforge::MaterialLibrary& shipped_materials() {
    static const auto lib =
        flakeforge::MaterialLibrary::load_directory(data_dir() / "materials");
    return lib;
}

// Owns the constant-index tables referenced by a library stack built from a
// random oracle stack description.
struct StackFixture {
    std::vector<std::unique_ptr<flakeforge::DispersionTable>> tables;
    flakeforge::LayerStack stack;

    explicit StackFixture(const oracles::RandomStack& s) {
        auto add = [this](const oracles::complexd& n) {
            tables.push_back(std::make_unique<flakeforge::DispersionTable>(
                oracles::make_material("m" + std::to_string(tables.size()), n.real(),
                                       n.imag())));
            return tables.back().get();
        };
        stack.incident = add(s.n0);
        for (const auto& layer : s.layers)
            stack.layers.push_back({add(layer.n), layer.d});
        stack.substrate = add(s.n_sub);
    }
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("flakeforge_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace helpers
