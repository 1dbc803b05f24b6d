#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flakeforge/coco.hpp"
#include "flakeforge/rng.hpp"

namespace flakeforge {

enum class QaTask { Counting, Localization, Verification };

const char* qa_task_name(QaTask t);

// Question phrasings per task; one is drawn per record. The defaults carry a
// single phrasing each.
struct QaTemplates {
    std::vector<std::string> counting = {"How many monolayer flakes are in the image?"};
    std::vector<std::string> localization = {"Locate the monolayer flakes."};
    std::vector<std::string> verification = {"Does this sample contain a monolayer flake?"};
};

// Structured answer: candidate enumeration of every flake, templated
// physics reasoning (contrast, color, layer count), and a conclusion that is
// machine-checkable against the annotations.
struct QaRecord {
    std::string image;
    QaTask task = QaTask::Counting;
    std::string question;
    nlohmann::json candidates;  // array of flake summaries
    std::string reasoning;
    std::string conclusion;
};

// One record per task type for a scene.
std::vector<QaRecord> gen_qa(const SceneAnnotation& scene, const QaTemplates& templates,
                             Rng& rng);

nlohmann::json qa_to_json(const QaRecord& record);

// Checks the conclusion against ground truth: exact monolayer count for
// counting, exact bbox set for localization, yes/no for verification.
bool qa_consistent(const QaRecord& record, const SceneAnnotation& scene);

void write_qa_jsonl_atomic(const std::filesystem::path& path,
                           const std::vector<QaRecord>& records);

} // namespace flakeforge
