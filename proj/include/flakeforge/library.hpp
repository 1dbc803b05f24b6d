#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "flakeforge/spectral.hpp"

namespace flakeforge {

// Owns loaded dispersion tables; lookups return stable references so layer
// stacks can hold plain pointers for the library's lifetime.
class MaterialLibrary {
public:
    MaterialLibrary() = default;

    // Loads every *.csv in the directory; material id = file stem.
    static MaterialLibrary load_directory(const std::filesystem::path& dir);

    void add(DispersionTable table);
    bool contains(const std::string& id) const { return tables_.count(id) != 0; }
    const DispersionTable& get(const std::string& id) const;

    std::size_t size() const { return tables_.size(); }

private:
    std::map<std::string, DispersionTable> tables_;
};

} // namespace flakeforge
