// cigenv: run scripted scenarios against the full environment and
// optionally keep serving the HTTP API afterwards.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cig/gateway/http.hpp"
#include "cig/gateway/scenario.hpp"

namespace fs = std::filesystem;
using namespace cig;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_expectation = 1;
constexpr int exit_config = 2;

cig::gateway::HttpGateway* serving = nullptr;

void on_signal(int)
{
    if (serving) serving->stop();
}

std::pair<std::string, int> split_address(const std::string& addr)
{
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) return {"127.0.0.1", std::stoi(addr)};
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Execution environment for computer-interpretable guidelines"};
    app.require_subcommand(1);

    fs::path data = "data";
    std::optional<fs::path> cigs, master, kdom_rules, kb, routes, external, scenario, journal, static_dir;
    fs::path out = "out";
    std::optional<std::string> serve;
    std::string log_level = "warn";
    std::size_t workers = 4;
    bool restart = false;
    bool no_gocom = false;

    auto* run = app.add_subcommand("run", "Run a scenario, write its trace report, optionally serve HTTP");
    run->add_option("--data", data, "Data directory used for anything not given explicitly")->capture_default_str();
    run->add_option("--cigs", cigs, "Guideline directory with pdss/ and vc/specialized/");
    run->add_option("--master", master, "Master coaching guideline");
    run->add_option("--kdom-rules", kdom_rules, "Abstraction rule file or directory");
    run->add_option("--interaction-kb", kb, "Drug interaction CSV");
    run->add_option("--routes", routes, "PDSS routing table");
    run->add_option("--external", external, "External data store (file or directory)");
    run->add_option("--scenario", scenario, "Scenario script");
    run->add_option("--out", out, "Report directory")->capture_default_str();
    run->add_option("--serve", serve, "Serve HTTP on host:port after the scenario");
    run->add_option("--static", static_dir, "Static files served at /");
    run->add_option("--journal", journal, "Journal file for the data platform");
    run->add_option("--workers", workers, "Event delivery threads")->capture_default_str();
    run->add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();
    run->add_flag("--restart-between-events", restart, "Rebuild PDSS and VC at every barrier");
    run->add_flag("--no-gocom", no_gocom, "Run without the interaction check");

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("cigenv"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (!scenario && !serve) {
        std::cerr << "run: give --scenario, --serve or both\n";
        return exit_config;
    }

    auto config = gateway::EnvironmentConfig::from_data_dir(data);
    if (cigs) {
        config.pdss_cigs = *cigs / "pdss";
        config.vc_cigs = *cigs / "vc" / "specialized";
        if (!master) config.master = *cigs / "vc" / "master.json";
    }
    if (master) config.master = *master;
    if (kdom_rules) config.kdom_rules = *kdom_rules;
    if (kb) config.interaction_kb = *kb;
    if (routes) config.routes = *routes;
    if (external) config.external = *external;
    config.journal = journal;
    config.workers = workers;
    config.gocom_available = !no_gocom;

    std::optional<gateway::ScenarioScript> script;
    std::unique_ptr<gateway::Environment> env;
    try {
        if (scenario) script = gateway::load_scenario(*scenario);
        env = std::make_unique<gateway::Environment>(config, script ? script->start : VirtualTime{});
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    }
    for (const auto& [file, msg] : env->load_errors()) std::cerr << "skipped " << file << ": " << msg << "\n";

    int code = exit_ok;
    if (script) {
        gateway::ScenarioRunner runner(*env, *script, {restart});
        gateway::ScenarioResult result;
        try {
            runner.setup();
            runner.run_all();
            result = runner.finish();
        } catch (const std::exception& e) {
            std::cerr << "scenario error: " << e.what() << "\n";
            return exit_config;
        }
        fs::create_directories(out);
        auto path = out / (script->name + ".report.json");
        std::ofstream(path) << result.text();
        for (const auto& e : result.expectations)
            std::cout << (e.passed ? "PASS  " : "FAIL  ") << e.description << (e.passed ? "" : "  (" + e.detail + ")")
                      << "\n";
        std::cout << script->name << ": " << result.report["summary"]["communications"].get<std::size_t>()
                  << " communications, report " << path.string() << "\n";
        if (!result.passed()) code = exit_expectation;
    }

    if (serve) {
        try {
            auto [host, port] = split_address(*serve);
            gateway::HttpGateway http(*env, static_dir);
            auto bound = http.bind(host, port);
            std::cout << "serving on http://" << host << ":" << bound << std::endl;
            serving = &http;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            http.serve();
            serving = nullptr;
        } catch (const std::exception& e) {
            std::cerr << "serve error: " << e.what() << "\n";
            return exit_config;
        }
    }
    return code;
}
