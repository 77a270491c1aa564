#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cig/bridge/cig_set.hpp"
#include "cig/bridge/resolver.hpp"
#include "cig/engine/instance.hpp"
#include "cig/gocom/gocom.hpp"
#include "cig/kdom/kdom.hpp"
#include "cig/platform/case_manager.hpp"

namespace cig::pdss {

enum class Route { direct_communication, gocom_mediation };

std::string_view to_string(Route r);

/// interventionType -> route. Unrecognized types go direct with a warning.
class RoutingTable {
public:
    /// tip, reminder, alert: direct. medication-proposal: GoCom.
    static RoutingTable defaults();
    /// JSON object {"<interventionType>": "direct-communication" | "gocom-mediation"}.
    static RoutingTable load(const std::filesystem::path& path);

    Route route(const std::string& intervention_type) const;
    const std::map<std::string, Route>& entries() const { return routes_; }

private:
    std::map<std::string, Route> routes_;
};

using bridge::CigSet;
using bridge::load_cig_dir;

enum class RunStatus { running, done, failed };

std::string_view to_string(RunStatus s);

struct AssessmentRun {
    std::string run_id;
    std::string patient_id;
    platform::EventEnvelope trigger_event;
    std::vector<std::string> instances;
    std::map<std::string, Value> gathered;
    std::vector<std::string> outputs;  // Communication ids
    std::vector<std::string> routed_tasks;  // "<guideline>/<task>" in routing order
    std::vector<std::pair<std::string, std::string>> failures;  // guideline, message
    std::vector<engine::RecordedInstance> recorded;  // engine inputs per instance
    RunStatus status = RunStatus::running;
    bool replayed = false;  // the event had already been handled
};

nlohmann::ordered_json to_json(const AssessmentRun& run);

inline constexpr std::string_view subscriber_id = "pdss";

/// PDSS: event-triggered assessments over every configured guideline.
/// Stateless between runs; everything it produces lives in the platform.
class Pdss {
public:
    Pdss(platform::DataPlatform& platform, const kdom::Kdom& kdom, const gocom::Gocom* gocom, CigSet cigs,
         RoutingTable routes = RoutingTable::defaults());

    /// One full operational cycle for the event's patient.
    AssessmentRun handle_event(const platform::EventEnvelope& ev) const;

    /// Subscribes to symptom-reported and assessment-requested events.
    void attach(platform::CaseManager& cm);

    /// Called after each run; used by the scenario runner.
    void on_run(std::function<void(const AssessmentRun&)> observer) { observer_ = std::move(observer); }

    const CigSet& cigs() const { return cigs_; }

private:
    struct Outcome {
        std::string instance_id;
        const model::ValidatedGuideline* guideline = nullptr;
        engine::CompletionReport report;
    };

    void route(AssessmentRun& run, const Outcome& outcome) const;
    std::string write_direct(const AssessmentRun& run, const Outcome& outcome, const engine::ReportedTask& task) const;
    std::string write_proposal(const AssessmentRun& run, const Outcome& outcome, const std::string& decision,
                               const std::vector<const engine::ReportedTask*>& members) const;

    platform::DataPlatform& platform_;
    const kdom::Kdom& kdom_;
    const gocom::Gocom* gocom_;
    CigSet cigs_;
    RoutingTable routes_;
    bridge::DataResolver resolver_;
    std::function<void(const AssessmentRun&)> observer_;
};

}  // namespace cig::pdss
