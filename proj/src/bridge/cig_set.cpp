#include "cig/bridge/cig_set.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace cig::bridge {

const model::ValidatedGuideline* CigSet::find(const std::string& id) const
{
    for (const auto& g : guidelines)
        if (g.id() == id) return &g;
    return nullptr;
}

model::ValidatedGuideline load_cig_file(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw NotFound("cannot read guideline " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return model::ValidatedGuideline::from(model::parse_guideline(buf.str()));
}

CigSet load_cig_dir(const std::filesystem::path& dir)
{
    CigSet out;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::set<std::string> ids;
    for (const auto& f : files) {
        try {
            auto g = load_cig_file(f);
            if (!ids.insert(g.id()).second) throw Conflict("guideline id " + g.id() + " already loaded");
            out.guidelines.push_back(std::move(g));
        } catch (const std::exception& e) {
            spdlog::error("cig load: {} skipped: {}", f.filename().string(), e.what());
            out.errors.emplace_back(f.filename().string(), e.what());
        }
    }
    return out;
}

}  // namespace cig::bridge
