#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flakeforge/coco.hpp"
#include "flakeforge/dataset.hpp"
#include "flakeforge/image.hpp"
#include "flakeforge/optics.hpp"
#include "flakeforge/pia.hpp"
#include "flakeforge/qa.hpp"
#include "flakeforge/synthesis.hpp"

#include "helpers.hpp"

using namespace flakeforge;

namespace {

int run_cli(const std::string& args, const std::filesystem::path& stdout_file = {}) {
    std::string cmd = std::string(FF_CLI_PATH) + " " + args;
    if (!stdout_file.empty())
        cmd += " > " + stdout_file.string() + " 2>&1";
    else
        cmd += " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string data_flag() { return std::string("--data-dir ") + FF_DATA_DIR; }

std::vector<std::pair<double, double>> read_csv_rows(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        rows.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return rows;
}

bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::vector<std::filesystem::path> rel_a, rel_b;
    for (auto& e : std::filesystem::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(std::filesystem::relative(e.path(), a));
    for (auto& e : std::filesystem::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(std::filesystem::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const auto& r : rel_a)
        if (helpers::read_file(a / r) != helpers::read_file(b / r)) return false;
    return true;
}

std::string dataset_config_json(const std::filesystem::path& refs,
                                const std::filesystem::path& out, int n_images, int n_flakes,
                                std::uint64_t seed, const std::string& wb_mode = "none") {
    std::ostringstream os;
    os << "{\n"
       << "  \"materials\": [{\"id\": \"mos2\", \"weight\": 1.0, \"monolayer_nm\": 0.65},\n"
       << "                  {\"id\": \"graphene\", \"weight\": 0.5, \"monolayer_nm\": 0.335}],\n"
       << "  \"oxide_nm\": 180,\n"
       << "  \"n_flakes\": " << n_flakes << ",\n"
       << "  \"flake_px\": [6, 14],\n"
       << "  \"grid\": {\"min_nm\": 400, \"max_nm\": 700, \"samples\": 31},\n"
       << "  \"substrate_percentile\": 90,\n"
       << "  \"max_retries\": 100,\n"
       << "  \"wb_mode\": \"" << wb_mode << "\",\n"
       << "  \"seed\": " << seed << ",\n"
       << "  \"reference_dir\": \"" << refs.string() << "\",\n"
       << "  \"output_dir\": \"" << out.string() << "\",\n"
       << "  \"n_images\": " << n_images << "\n"
       << "}\n";
    return os.str();
}

void write_reference(const std::filesystem::path& p, int w, int h) {
    SynthesisConfig cfg;
    cfg.materials = {{"mos2", 1.0, 0.65, {}}};
    const Rgb c = bare_substrate_color(cfg, helpers::shipped_materials(),
                                       helpers::load_d65_system());
    write_png(p, encode_srgb_image(ImageF(w, h, c)));
}

} // namespace

TEST_CASE("cli spectrum") {
    helpers::TempDir tmp("cli_spectrum");
    const auto out = tmp.path / "s.csv";

    SUBCASE("bare stack via the sio2_only sentinel") {
        REQUIRE(run_cli("spectrum --material sio2_only --oxide-nm 180 --out " + out.string() +
                        " " + data_flag()) == 0);
        const auto rows = read_csv_rows(out);
        REQUIRE(rows.size() == 31);
        const auto& lib = helpers::shipped_materials();
        LayerStack bare{&lib.get("air"), {{&lib.get("sio2"), 180.0}}, &lib.get("si")};
        const auto curve = reflectance_spectrum(bare, SpectralGrid());
        for (std::size_t i = 0; i < rows.size(); ++i)
            CHECK(rows[i].second ==
                  doctest::Approx(curve.values[i]).epsilon(1e-7));
    }
    SUBCASE("--samples 2 writes exactly two data rows") {
        REQUIRE(run_cli("spectrum --material sio2_only --samples 2 --out " + out.string() + " " +
                        data_flag()) == 0);
        CHECK(read_csv_rows(out).size() == 2);
    }
    SUBCASE("default mos2 monolayer equals the library spectrum") {
        REQUIRE(run_cli("spectrum --material mos2 --layers 1 --out " + out.string() + " " +
                        data_flag()) == 0);
        const auto rows = read_csv_rows(out);
        const auto& lib = helpers::shipped_materials();
        LayerStack stack{&lib.get("air"),
                         {{&lib.get("mos2"), 0.65}, {&lib.get("sio2"), 180.0}},
                         &lib.get("si")};
        const auto curve = reflectance_spectrum(stack, SpectralGrid());
        REQUIRE(rows.size() == curve.values.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            CHECK(rows[i].second == doctest::Approx(curve.values[i]).epsilon(1e-7));
    }
    SUBCASE("missing material exits 2") {
        CHECK(run_cli("spectrum --material unobtainium --out " + out.string() + " " +
                      data_flag()) == 2);
    }
    SUBCASE("unknown flag exits 1") {
        CHECK(run_cli("spectrum --definitely-not-a-flag 3") == 1);
    }
}

TEST_CASE("cli color") {
    helpers::TempDir tmp("cli_color");
    const auto out1 = tmp.path / "a.txt";
    const auto out2 = tmp.path / "b.txt";

    SUBCASE("near-zero thickness keeps delta E under 0.1") {
        REQUIRE(run_cli("color --material mos2 --thickness-nm 1e-9 " + data_flag(), out1) == 0);
        const auto text = helpers::read_file(out1);
        const auto pos = text.find("delta_e: ");
        REQUIRE(pos != std::string::npos);
        CHECK(std::stod(text.substr(pos + 9)) < 0.1);
    }
    SUBCASE("identical invocations print identical reports") {
        REQUIRE(run_cli("color --material graphene --layers 3 " + data_flag(), out1) == 0);
        REQUIRE(run_cli("color --material graphene --layers 3 " + data_flag(), out2) == 0);
        CHECK(helpers::read_file(out1) == helpers::read_file(out2));
    }
    SUBCASE("report matches the library pipeline") {
        REQUIRE(run_cli("color --material mos2 --layers 2 " + data_flag(), out1) == 0);
        const auto text = helpers::read_file(out1);
        const auto& lib = helpers::shipped_materials();
        const auto system = helpers::load_d65_system();
        SynthesisConfig cfg;
        cfg.materials = {{"mos2", 1.0, 0.65, {}}};
        const Rgb expected = flake_color("mos2", 1.3, cfg, lib, system, WbGain{});
        char needle[64];
        std::snprintf(needle, sizeof needle, "(%.6f, %.6f, %.6f)", expected.r, expected.g,
                      expected.b);
        CHECK(text.find(needle) != std::string::npos);
    }
}

TEST_CASE("cli pia") {
    helpers::TempDir tmp("cli_pia");
    const auto system = helpers::load_d65_system();

    SUBCASE("constant image produces an all-black map") {
        const auto input = tmp.path / "flat.png";
        write_reference(input, 56, 56);
        const auto map_out = tmp.path / "map.png";
        REQUIRE(run_cli("pia " + input.string() + " --map-out " + map_out.string() + " " +
                        data_flag()) == 0);
        const auto map = read_png(map_out);
        for (auto v : map.data) CHECK(v == 0);
    }
    SUBCASE("map pixels equal the rounded library map") {
        Rng rng(103);
        ImageF img(70, 56);
        for (auto& p : img.pixels) p = {rng.uniform(), rng.uniform(), rng.uniform()};
        const auto input = tmp.path / "rand.png";
        write_png(input, encode_srgb_image(img));

        const auto map_out = tmp.path / "map.png";
        const auto csv_out = tmp.path / "scores.csv";
        const auto mask_out = tmp.path / "mask.png";
        REQUIRE(run_cli("pia " + input.string() + " --patch 14 --map-out " + map_out.string() +
                        " --mask-out " + mask_out.string() + " --csv-out " + csv_out.string() +
                        " " + data_flag()) == 0);

        const ImageF decoded = decode_srgb_image(read_png(input));
        const auto map = pia_map(decoded, 14, 14, system);
        const auto png = read_png(map_out);
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                CHECK(png.at(x, y, 0) ==
                      static_cast<int>(std::lround(255.0 * map.at(x, y))));

        // CSV header and row count: 5 x 4 patches
        std::ifstream csv(csv_out);
        std::string header;
        std::getline(csv, header);
        CHECK(header == "patch_row,patch_col,delta_e,normalized");
        int rows = 0;
        std::string line;
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 20);

        const auto mask = substrate_mask(map, 90.0);
        const auto mask_png = read_png(mask_out);
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                CHECK((mask_png.at(x, y, 0) == 255) == mask.at(x, y));
    }
    SUBCASE("unreadable image exits 2") {
        CHECK(run_cli("pia " + (tmp.path / "missing.png").string() + " " + data_flag()) == 2);
    }
}

TEST_CASE("cli calibrate") {
    helpers::TempDir tmp("cli_cal");
    const auto ref = tmp.path / "ref.png";
    write_reference(ref, 48, 48);
    const auto out = tmp.path / "out.txt";

    SUBCASE("self-rendered reference gives unit gain up to 8-bit quantization") {
        REQUIRE(run_cli("calibrate " + ref.string() + " --oxide-nm 180 " + data_flag(), out) == 0);
        const auto text = helpers::read_file(out);
        const auto pos = text.find("gain: (");
        REQUIRE(pos != std::string::npos);
        double r, g, b;
        REQUIRE(std::sscanf(text.c_str() + pos, "gain: (%lf, %lf, %lf)", &r, &g, &b) == 3);
        CHECK(std::abs(r - 1.0) < 0.01);
        CHECK(std::abs(g - 1.0) < 0.01);
        CHECK(std::abs(b - 1.0) < 0.01);
    }
    SUBCASE("--normalize pins the mean gain to 1") {
        REQUIRE(run_cli("calibrate " + ref.string() + " --normalize " + data_flag(), out) == 0);
        const auto text = helpers::read_file(out);
        const auto pos = text.find("gain: (");
        REQUIRE(pos != std::string::npos);
        double r, g, b;
        REQUIRE(std::sscanf(text.c_str() + pos, "gain: (%lf, %lf, %lf)", &r, &g, &b) == 3);
        CHECK((r + g + b) / 3.0 == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cli dataset") {
    helpers::TempDir tmp("cli_dataset");
    const auto refs = tmp.path / "refs";
    std::filesystem::create_directories(refs);
    write_reference(refs / "ref_a.png", 96, 96);
    write_reference(refs / "ref_b.png", 96, 96);

    SUBCASE("zero flakes reproduces the reference byte for byte") {
        const auto out = tmp.path / "out0";
        const auto cfg = tmp.path / "cfg0.json";
        helpers::write_file(cfg, dataset_config_json(refs, out, 1, 0, 7));
        REQUIRE(run_cli("dataset " + cfg.string() + " " + data_flag()) == 0);
        CHECK(helpers::read_file(out / "images" / "scene_00000.png") ==
              helpers::read_file(refs / "ref_a.png"));
        const auto coco = coco_from_json(
            nlohmann::json::parse(helpers::read_file(out / "annotations.json")));
        CHECK(coco.annotations.empty());
        CHECK(coco.images.size() == 1);
        CHECK(std::filesystem::exists(out / "run_manifest.json"));
    }
    SUBCASE("same config and seed give byte-identical trees") {
        const auto out1 = tmp.path / "run1";
        const auto out2 = tmp.path / "run2";
        const auto cfg1 = tmp.path / "cfg1.json";
        const auto cfg2 = tmp.path / "cfg2.json";
        helpers::write_file(cfg1, dataset_config_json(refs, out1, 3, 6, 99));
        helpers::write_file(cfg2, dataset_config_json(refs, out2, 3, 6, 99));
        REQUIRE(run_cli("dataset " + cfg1.string() + " " + data_flag()) == 0);
        REQUIRE(run_cli("dataset " + cfg2.string() + " " + data_flag()) == 0);
        // manifests embed the config hash; configs differ only in paths, so
        // compare everything except the manifest, then the manifest fields
        CHECK(helpers::read_file(out1 / "annotations.json") ==
              helpers::read_file(out2 / "annotations.json"));
        CHECK(helpers::read_file(out1 / "instructions.jsonl") ==
              helpers::read_file(out2 / "instructions.jsonl"));
        for (int i = 0; i < 3; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "scene_%05d.png", i);
            CHECK(helpers::read_file(out1 / "images" / name) ==
                  helpers::read_file(out2 / "images" / name));
            CHECK(helpers::read_file(out1 / "masks" / name) ==
                  helpers::read_file(out2 / "masks" / name));
        }
    }
    SUBCASE("output is independent of the worker count") {
        const auto out1 = tmp.path / "jobs1";
        const auto out2 = tmp.path / "jobs3";
        const auto cfg1 = tmp.path / "jcfg1.json";
        const auto cfg2 = tmp.path / "jcfg2.json";
        helpers::write_file(cfg1, dataset_config_json(refs, out1, 4, 5, 123));
        helpers::write_file(cfg2, dataset_config_json(refs, out2, 4, 5, 123));
        REQUIRE(run_cli("dataset " + cfg1.string() + " --jobs 1 " + data_flag()) == 0);
        REQUIRE(run_cli("dataset " + cfg2.string() + " --jobs 3 " + data_flag()) == 0);
        CHECK(helpers::read_file(out1 / "annotations.json") ==
              helpers::read_file(out2 / "annotations.json"));
        for (int i = 0; i < 4; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "scene_%05d.png", i);
            CHECK(helpers::read_file(out1 / "images" / name) ==
                  helpers::read_file(out2 / "images" / name));
        }
    }
    SUBCASE("annotations and instructions stay mutually consistent") {
        const auto out = tmp.path / "full";
        const auto cfg = tmp.path / "cfgf.json";
        helpers::write_file(cfg, dataset_config_json(refs, out, 2, 8, 4242, "from_reference"));
        REQUIRE(run_cli("dataset " + cfg.string() + " " + data_flag()) == 0);
        const auto ds = coco_from_json(
            nlohmann::json::parse(helpers::read_file(out / "annotations.json")));
        validate_coco(ds);
        CHECK(ds.images.size() == 2);

        std::ifstream jsonl(out / "instructions.jsonl");
        std::string line;
        int records = 0;
        while (std::getline(jsonl, line)) {
            if (line.empty()) continue;
            ++records;
            const auto j = nlohmann::json::parse(line);
            CHECK(j.contains("image"));
            CHECK(j["answer"].contains("conclusion"));
        }
        CHECK(records == 6);  // three tasks per scene
    }
    SUBCASE("invalid config exits 2 without writing output") {
        const auto out = tmp.path / "never";
        const auto cfg = tmp.path / "bad.json";
        helpers::write_file(cfg, dataset_config_json(refs, out, 1, -5, 1));  // n_flakes < 0
        CHECK(run_cli("dataset " + cfg.string() + " " + data_flag()) == 2);
        CHECK_FALSE(std::filesystem::exists(out));
    }
    SUBCASE("missing reference dir exits 2") {
        const auto cfg = tmp.path / "noref.json";
        helpers::write_file(cfg,
                            dataset_config_json(tmp.path / "nowhere", tmp.path / "o", 1, 1, 1));
        CHECK(run_cli("dataset " + cfg.string() + " " + data_flag()) == 2);
    }
}

TEST_CASE("cli usage errors exit 1") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("dataset") == 1);  // missing required config argument
}
