#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cig/model/guideline.hpp"

namespace cig::bridge {

/// Guidelines found in a directory. Files that fail to parse or validate
/// are listed in `errors` and left out.
struct CigSet {
    std::vector<model::ValidatedGuideline> guidelines;
    std::vector<std::pair<std::string, std::string>> errors;  // file, message

    const model::ValidatedGuideline* find(const std::string& id) const;
};

/// *.json files in name order. A second file with an already loaded id is
/// an error for that file.
CigSet load_cig_dir(const std::filesystem::path& dir);

/// Single file; throws on parse or validation errors.
model::ValidatedGuideline load_cig_file(const std::filesystem::path& file);

}  // namespace cig::bridge
