#pragma once

#include <cstdio>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

namespace cig::platform {

/// Append-only JSON-lines file. One record per line, written with a fixed
/// key order; optionally fsync'ed after every append.
class Journal {
public:
    Journal(std::filesystem::path path, bool fsync_each);
    ~Journal();
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Reads every complete record. A torn final line (crash mid-write) is
    /// dropped and cut from the file so later appends start cleanly.
    std::vector<nlohmann::json> load();

    void append(const nlohmann::ordered_json& record);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    bool fsync_each_;
    int fd_ = -1;
};

}  // namespace cig::platform
