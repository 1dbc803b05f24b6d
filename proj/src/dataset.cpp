#include "flakeforge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "flakeforge/coco.hpp"
#include "flakeforge/error.hpp"
#include "flakeforge/image.hpp"
#include "flakeforge/qa.hpp"

namespace flakeforge {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

WbMode parse_wb_mode(const std::string& s) {
    if (s == "from_reference") return WbMode::FromReference;
    if (s == "explicit") return WbMode::Explicit;
    if (s == "none") return WbMode::None;
    throw ConfigError("config: wb_mode must be from_reference, explicit or none, got '" + s + "'");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

std::string scene_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%05d.png", index);
    return buf;
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string raw((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }

    RunConfig cfg;
    cfg.config_hash = fnv1a64(raw.data(), raw.size());
    try {
        for (const auto& m : j.at("materials")) {
            MaterialSpec spec;
            spec.id = m.at("id").get<std::string>();
            spec.weight = m.value("weight", 1.0);
            spec.monolayer_nm = m.value("monolayer_nm", 0.65);
            if (m.contains("layer_distribution")) {
                for (const auto& [key, weight] : m.at("layer_distribution").items())
                    spec.layer_distribution.emplace_back(std::stoi(key), weight.get<double>());
                std::sort(spec.layer_distribution.begin(), spec.layer_distribution.end());
            }
            cfg.synth.materials.push_back(std::move(spec));
        }
        cfg.synth.oxide_nm = j.value("oxide_nm", 180.0);
        cfg.synth.n_flakes = j.value("n_flakes", 30);
        if (j.contains("flake_px")) {
            const auto& r = j.at("flake_px");
            if (!r.is_array() || r.size() != 2)
                throw ConfigError("config: flake_px must be [min, max]");
            cfg.synth.flake_min_px = r[0].get<int>();
            cfg.synth.flake_max_px = r[1].get<int>();
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            cfg.synth.grid = SpectralGrid(g.value("min_nm", 400.0), g.value("max_nm", 700.0),
                                          g.value("samples", 31));
        }
        cfg.synth.substrate_percentile = j.value("substrate_percentile", 90.0);
        cfg.synth.max_retries = j.value("max_retries", 100);
        cfg.synth.patch_px = j.value("patch_px", 14);
        cfg.synth.wb_mode = parse_wb_mode(j.value("wb_mode", std::string("from_reference")));
        if (cfg.synth.wb_mode == WbMode::Explicit) {
            if (!j.contains("wb_gain"))
                throw ConfigError("config: wb_mode 'explicit' requires wb_gain [r, g, b]");
            const auto& g = j.at("wb_gain");
            if (!g.is_array() || g.size() != 3)
                throw ConfigError("config: wb_gain must be [r, g, b]");
            cfg.synth.explicit_gain = {g[0].get<double>(), g[1].get<double>(), g[2].get<double>()};
        }
        cfg.synth.seed = j.value("seed", 0ull);
        cfg.n_images = j.value("n_images", 1);
        cfg.jobs = j.value("jobs", 0);

        const auto base = path.parent_path();
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };
        cfg.reference_dir = resolve(j.at("reference_dir").get<std::string>());
        cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError(path.string() + ": layer_distribution keys must be integers");
    }

    cfg.synth.validate();
    if (cfg.n_images < 0) throw ConfigError("config: n_images must be >= 0");
    if (cfg.jobs < 0) throw ConfigError("config: jobs must be >= 0");
    return cfg;
}

RunSummary run_dataset(const RunConfig& config, const MaterialLibrary& materials,
                       const ColorSystem& system) {
    // validate everything (config, references) before any file is written
    config.synth.validate();
    if (!std::filesystem::is_directory(config.reference_dir))
        throw ConfigError("reference_dir not found: " + config.reference_dir.string());
    std::vector<std::filesystem::path> references;
    for (const auto& entry : std::filesystem::directory_iterator(config.reference_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            references.push_back(entry.path());
    std::sort(references.begin(), references.end());
    if (references.empty())
        throw ConfigError("no reference images (*.png) in " + config.reference_dir.string());

    std::filesystem::create_directories(config.output_dir / "images");
    std::filesystem::create_directories(config.output_dir / "masks");

    const int n = config.n_images;
    std::vector<SceneAnnotation> annotations(static_cast<std::size_t>(n));
    std::vector<SceneReport> reports(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));

    std::atomic<int> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const int i = cursor.fetch_add(1);
            if (i >= n) return;
            try {
                const auto& ref_path = references[static_cast<std::size_t>(i) % references.size()];
                const ImageF reference = decode_srgb_image(read_png(ref_path));

                SynthesisConfig scene_cfg = config.synth;
                scene_cfg.seed = mix_seed(config.synth.seed, static_cast<std::uint64_t>(i));
                SceneResult scene = synthesize_scene(reference, scene_cfg, materials, system);

                const std::string name = scene_name(i);
                write_png_atomic(config.output_dir / "images" / name, scene.image);

                Image8 sidecar(scene.image.width, scene.image.height, 1);
                for (std::size_t f = 0; f < scene.flakes.size(); ++f) {
                    const auto& flake = scene.flakes[f];
                    for (int y = 0; y < flake.mask.height; ++y)
                        for (int x = 0; x < flake.mask.width; ++x)
                            if (flake.mask.at(x, y))
                                sidecar.at(flake.x + x, flake.y + y, 0) =
                                    static_cast<std::uint8_t>(f + 1);
                }
                write_png_atomic(config.output_dir / "masks" / name, sidecar);

                SceneAnnotation ann;
                ann.file_name = name;
                ann.width = scene.image.width;
                ann.height = scene.image.height;
                ann.flakes = std::move(scene.flakes);

                reports[static_cast<std::size_t>(i)] = {
                    name, ref_path.filename().string(),
                    static_cast<int>(ann.flakes.size()), scene.skipped_placements};
                annotations[static_cast<std::size_t>(i)] = std::move(ann);
            } catch (...) {
                failures[static_cast<std::size_t>(i)] = std::current_exception();
                return;
            }
        }
    };

    unsigned workers = config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(1, n)));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);

    write_coco_atomic(config.output_dir / "annotations.json", to_coco(annotations));

    std::vector<QaRecord> qa;
    qa.reserve(static_cast<std::size_t>(n) * 3);
    const QaTemplates templates;
    for (int i = 0; i < n; ++i) {
        Rng qa_rng(mix_seed(mix_seed(config.synth.seed, static_cast<std::uint64_t>(i)), 0x51Aull));
        auto records = gen_qa(annotations[static_cast<std::size_t>(i)], templates, qa_rng);
        std::move(records.begin(), records.end(), std::back_inserter(qa));
    }
    write_qa_jsonl_atomic(config.output_dir / "instructions.jsonl", qa);

    RunSummary summary;
    summary.scenes = std::move(reports);
    nlohmann::json manifest;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(config.config_hash));
    manifest["config_hash"] = hash_hex;
    manifest["seed"] = config.synth.seed;
    manifest["n_images"] = n;
    manifest["scenes"] = nlohmann::json::array();
    for (const auto& r : summary.scenes) {
        summary.total_flakes += r.flakes;
        summary.total_skipped += r.skipped;
        manifest["scenes"].push_back({{"image", r.image_file},
                                      {"reference", r.reference_file},
                                      {"flakes", r.flakes},
                                      {"skipped", r.skipped}});
    }
    manifest["total_flakes"] = summary.total_flakes;
    manifest["total_skipped"] = summary.total_skipped;
    write_text_atomic(config.output_dir / "run_manifest.json", manifest.dump(2) + "\n");
    return summary;
}

} // namespace flakeforge
