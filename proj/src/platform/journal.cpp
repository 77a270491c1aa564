#include "cig/platform/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cig/core/error.hpp"

namespace cig::platform {

namespace {

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path)
{
    throw Error(what + " " + path.string() + ": " + std::strerror(errno));
}

}  // namespace

Journal::Journal(std::filesystem::path path, bool fsync_each) : path_(std::move(path)), fsync_each_(fsync_each)
{
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) fail("cannot open journal", path_);
}

Journal::~Journal()
{
    if (fd_ >= 0) ::close(fd_);
}

std::vector<nlohmann::json> Journal::load()
{
    std::ifstream in(path_, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::vector<nlohmann::json> out;
    std::size_t pos = 0;
    std::size_t good_end = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // no terminator: torn
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty()) {
            auto rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded()) {
                // Only the tail may be damaged; anything earlier is corruption.
                if (nl + 1 < text.size())
                    throw Error("corrupt journal record at byte " + std::to_string(pos) + " of " + path_.string());
                break;
            }
            out.push_back(std::move(rec));
        }
        pos = nl + 1;
        good_end = pos;
    }
    if (good_end < text.size()) {
        spdlog::warn("journal {}: dropping {} bytes of torn tail", path_.string(), text.size() - good_end);
        if (::ftruncate(fd_, static_cast<off_t>(good_end)) != 0) fail("cannot truncate journal", path_);
    }
    return out;
}

void Journal::append(const nlohmann::ordered_json& record)
{
    std::string line = record.dump();
    line.push_back('\n');
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        auto n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("cannot append to journal", path_);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (fsync_each_ && ::fsync(fd_) != 0) fail("cannot fsync journal", path_);
}

}  // namespace cig::platform
