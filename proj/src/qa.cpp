#include "flakeforge/qa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flakeforge/error.hpp"

namespace flakeforge {

namespace {

std::string srgb_hex(const Rgb& color) {
    const auto d = srgb_encode(color);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(std::clamp(d[0], 0.0, 255.0))),
                  static_cast<int>(std::lround(std::clamp(d[1], 0.0, 255.0))),
                  static_cast<int>(std::lround(std::clamp(d[2], 0.0, 255.0))));
    return buf;
}

std::string format_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string bbox_text(const BBox& b) {
    std::ostringstream os;
    os << "[" << b.x << ", " << b.y << ", " << b.w << ", " << b.h << "]";
    return os.str();
}

std::vector<BBox> mono_bboxes(const SceneAnnotation& scene) {
    std::vector<BBox> boxes;
    for (const auto& f : scene.flakes)
        if (f.layer_class == LayerClass::Mono)
            boxes.push_back(bbox_from_mask(f.mask, f.x, f.y));
    return boxes;
}

nlohmann::json make_candidates(const SceneAnnotation& scene) {
    nlohmann::json arr = nlohmann::json::array();
    int index = 0;
    for (const auto& f : scene.flakes) {
        const BBox b = bbox_from_mask(f.mask, f.x, f.y);
        arr.push_back({{"index", ++index},
                       {"bbox", {b.x, b.y, b.w, b.h}},
                       {"material", f.material_id},
                       {"layers", f.layer_count},
                       {"class", layer_class_name(f.layer_class)},
                       {"thickness_nm", std::round(f.thickness_nm * 1000.0) / 1000.0},
                       {"color", srgb_hex(f.color)},
                       {"delta_e", std::round(f.contrast_delta_e * 100.0) / 100.0}});
    }
    return arr;
}

std::string make_reasoning(const SceneAnnotation& scene) {
    std::ostringstream os;
    if (scene.flakes.empty()) {
        os << "No flake candidates were placed; every region matches the bare "
              "substrate color, so the perceptual contrast is zero everywhere.";
        return os.str();
    }
    int index = 0;
    std::vector<int> mono_indices;
    for (const auto& f : scene.flakes) {
        ++index;
        os << "Candidate " << index << " (" << f.material_id << ", " << f.layer_count
           << (f.layer_count == 1 ? " layer, " : " layers, ")
           << format_double(f.thickness_nm, 2) << " nm) reflects as " << srgb_hex(f.color)
           << " with contrast dE " << format_double(f.contrast_delta_e, 2)
           << " against the substrate. ";
        if (f.layer_class == LayerClass::Mono) mono_indices.push_back(index);
    }
    os << "Thin-film interference makes contrast grow with layer count, so the faintest "
          "candidates are the thinnest. ";
    if (mono_indices.empty()) {
        os << "No candidate has exactly 1 layer.";
    } else {
        os << "Candidates with exactly 1 layer:";
        for (std::size_t i = 0; i < mono_indices.size(); ++i)
            os << (i ? ", " : " ") << mono_indices[i];
        os << ".";
    }
    return os.str();
}

std::string counting_conclusion(std::size_t n) {
    std::ostringstream os;
    if (n == 1)
        os << "There is 1 monolayer flake in the image.";
    else
        os << "There are " << n << " monolayer flakes in the image.";
    return os.str();
}

std::string localization_conclusion(const std::vector<BBox>& boxes) {
    if (boxes.empty()) return "There are no monolayer flakes to locate.";
    std::ostringstream os;
    os << "Monolayer flakes at: ";
    for (std::size_t i = 0; i < boxes.size(); ++i)
        os << (i ? "; " : "") << bbox_text(boxes[i]);
    os << ".";
    return os.str();
}

std::string verification_conclusion(bool present) {
    return present ? "Yes, the sample contains at least one monolayer flake."
                   : "No, the sample does not contain a monolayer flake.";
}

const std::string& draw(const std::vector<std::string>& options, Rng& rng) {
    if (options.empty()) throw ConfigError("gen_qa: empty template list");
    return options[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
}

} // namespace

const char* qa_task_name(QaTask t) {
    switch (t) {
        case QaTask::Counting: return "counting";
        case QaTask::Localization: return "localization";
        case QaTask::Verification: return "verification";
    }
    return "?";
}

std::vector<QaRecord> gen_qa(const SceneAnnotation& scene, const QaTemplates& templates,
                             Rng& rng) {
    const auto boxes = mono_bboxes(scene);
    const auto candidates = make_candidates(scene);
    const auto reasoning = make_reasoning(scene);

    std::vector<QaRecord> records(3);
    records[0] = {scene.file_name, QaTask::Counting, draw(templates.counting, rng),
                  candidates, reasoning, counting_conclusion(boxes.size())};
    records[1] = {scene.file_name, QaTask::Localization, draw(templates.localization, rng),
                  candidates, reasoning, localization_conclusion(boxes)};
    records[2] = {scene.file_name, QaTask::Verification, draw(templates.verification, rng),
                  candidates, reasoning, verification_conclusion(!boxes.empty())};
    return records;
}

nlohmann::json qa_to_json(const QaRecord& record) {
    return {{"image", record.image},
            {"task", qa_task_name(record.task)},
            {"question", record.question},
            {"answer",
             {{"candidates", record.candidates},
              {"reasoning", record.reasoning},
              {"conclusion", record.conclusion}}}};
}

namespace {

// All "[a, b, c, d]" integer quadruples appearing in a string.
std::vector<BBox> parse_bboxes(const std::string& text) {
    std::vector<BBox> boxes;
    std::size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string::npos) {
        const std::size_t end = text.find(']', pos);
        if (end == std::string::npos) break;
        std::string inner = text.substr(pos + 1, end - pos - 1);
        for (auto& ch : inner)
            if (ch == ',') ch = ' ';
        std::istringstream is(inner);
        BBox b;
        if (is >> b.x >> b.y >> b.w >> b.h) {
            std::string rest;
            if (!(is >> rest)) boxes.push_back(b);
        }
        pos = end + 1;
    }
    return boxes;
}

std::optional<long> parse_first_integer(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i)
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            return std::stol(text.substr(i, j - i));
        }
    return std::nullopt;
}

} // namespace

bool qa_consistent(const QaRecord& record, const SceneAnnotation& scene) {
    if (record.image != scene.file_name) return false;
    auto boxes = mono_bboxes(scene);
    switch (record.task) {
        case QaTask::Counting: {
            const auto n = parse_first_integer(record.conclusion);
            return n && *n == static_cast<long>(boxes.size());
        }
        case QaTask::Localization: {
            auto claimed = parse_bboxes(record.conclusion);
            auto key = [](const BBox& b) { return std::array<int, 4>{b.x, b.y, b.w, b.h}; };
            std::vector<std::array<int, 4>> lhs, rhs;
            for (const auto& b : claimed) lhs.push_back(key(b));
            for (const auto& b : boxes) rhs.push_back(key(b));
            std::sort(lhs.begin(), lhs.end());
            std::sort(rhs.begin(), rhs.end());
            return lhs == rhs;
        }
        case QaTask::Verification: {
            const bool yes = record.conclusion.rfind("Yes", 0) == 0;
            const bool no = record.conclusion.rfind("No", 0) == 0;
            if (!yes && !no) return false;
            return yes == !boxes.empty();
        }
    }
    return false;
}

void write_qa_jsonl_atomic(const std::filesystem::path& path,
                           const std::vector<QaRecord>& records) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        for (const auto& r : records) out << qa_to_json(r).dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

} // namespace flakeforge
