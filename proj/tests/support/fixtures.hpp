#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cig/model/guideline.hpp"

namespace cig::testing {

inline std::string data_path(const std::string& relative)
{
    return std::string(CIG_DATA_DIR) + "/" + relative;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline model::GuidelineDefinition load_definition(const std::string& relative)
{
    return model::parse_guideline(read_file(data_path(relative)));
}

inline model::ValidatedGuideline load_guideline(const std::string& relative)
{
    return model::ValidatedGuideline::from(load_definition(relative));
}

}  // namespace cig::testing
