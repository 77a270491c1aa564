#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cig/gateway/environment.hpp"

namespace cig::gateway {

/// One scripted step. Steps run in (at, declaration) order.
struct ScenarioStep {
    enum class Kind { event, store, respond };

    Kind kind = Kind::event;
    VirtualTime at;
    std::string event_type;  // event
    std::string patient;     // event
    std::map<std::string, std::string> payload;
    platform::Resource resource;      // store
    RecommendationResponse response;  // respond
};

struct Expectation {
    std::string description;
    nlohmann::json check;  // one of the keys documented in docs/scenario-format.md
};

struct ScenarioScript {
    std::string name;
    std::string description;
    VirtualTime start;
    std::vector<std::pair<std::string, std::string>> patients;  // id, name
    std::vector<platform::Resource> initial_resources;
    std::vector<ScenarioStep> steps;
    std::vector<Expectation> expectations;
};

/// Throws InvalidArgument on a malformed script.
ScenarioScript parse_scenario(const nlohmann::json& j);
ScenarioScript load_scenario(const std::filesystem::path& path);

struct ExpectationResult {
    std::string description;
    bool passed = false;
    std::string detail;
};

ExpectationResult evaluate(const Environment& env, const Expectation& e);

/// Communications, medication statements, events and traces of one
/// patient, in a fixed order that does not depend on thread timing.
nlohmann::ordered_json patient_report(const platform::DataPlatform& dp, const std::string& patient);

struct ScenarioResult {
    nlohmann::ordered_json report;
    std::vector<ExpectationResult> expectations;

    bool passed() const;
    /// The report as written to disk: two-space indent, trailing newline.
    std::string text() const { return report.dump(2) + "\n"; }
};

struct RunOptions {
    /// Drop and rebuild PDSS and VC at every barrier.
    bool restart_between_events = false;
};

/// Drives an environment through a script. Processing triggered by one
/// point in virtual time drains before the clock moves on, and before any
/// respond or store step.
class ScenarioRunner {
public:
    ScenarioRunner(Environment& env, const ScenarioScript& script, RunOptions options = {});

    /// Patients and initial resources; skips what the platform already has.
    void setup();
    std::size_t steps() const { return script_.steps.size(); }
    void run_step(std::size_t i);
    void run_all();
    ScenarioResult finish() const;

private:
    Environment& env_;
    const ScenarioScript& script_;
    RunOptions options_;
};

ScenarioResult run_scenario(const ScenarioScript& script, const EnvironmentConfig& config, RunOptions options = {});

}  // namespace cig::gateway
