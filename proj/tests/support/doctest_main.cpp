#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include <spdlog/spdlog.h>

int main(int argc, char** argv)
{
    // quiet by default; CIG_TEST_LOG=debug shows component logs
    const char* level = std::getenv("CIG_TEST_LOG");
    spdlog::set_level(spdlog::level::from_str(level ? level : "warn"));
    if (!level) spdlog::set_level(spdlog::level::off);
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
