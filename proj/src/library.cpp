#include "flakeforge/library.hpp"

#include <algorithm>

#include "flakeforge/error.hpp"

namespace flakeforge {

MaterialLibrary MaterialLibrary::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("material directory not found: " + dir.string());
    MaterialLibrary lib;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) lib.add(load_dispersion(f));
    if (lib.size() == 0)
        throw IoError("no dispersion tables (*.csv) in " + dir.string());
    return lib;
}

void MaterialLibrary::add(DispersionTable table) {
    auto id = table.material_id();
    if (!tables_.emplace(std::move(id), std::move(table)).second)
        throw ValidationError("duplicate material id: " + table.material_id());
}

const DispersionTable& MaterialLibrary::get(const std::string& id) const {
    const auto it = tables_.find(id);
    if (it == tables_.end())
        throw ConfigError("unknown material '" + id + "'");
    return it->second;
}

} // namespace flakeforge
