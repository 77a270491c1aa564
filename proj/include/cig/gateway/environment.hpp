#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cig/core/clock.hpp"
#include "cig/gocom/gocom.hpp"
#include "cig/kdom/kdom.hpp"
#include "cig/pdss/pdss.hpp"
#include "cig/platform/case_manager.hpp"
#include "cig/vc/vc.hpp"

namespace cig::gateway {

/// Raised by respond() when the chosen options break the gate.
class GateViolation : public Conflict {
public:
    using Conflict::Conflict;
};

struct EnvironmentConfig {
    std::filesystem::path pdss_cigs;  // assessment guidelines
    std::filesystem::path vc_cigs;    // specialized coaching guidelines
    std::optional<std::filesystem::path> master;
    std::optional<std::filesystem::path> kdom_rules;
    std::optional<std::filesystem::path> interaction_kb;
    std::optional<std::filesystem::path> routes;
    std::optional<std::filesystem::path> external;
    std::optional<std::filesystem::path> journal;
    bool fsync = false;
    std::size_t workers = 0;  // 0: deliver on the publishing thread
    bool gocom_available = true;
    vc::VcOptions vc;

    /// The repository's data/ layout: cigs/pdss, cigs/vc/master.json,
    /// cigs/vc/specialized, kdom/, kb/interactions.csv, routing/, external/.
    static EnvironmentConfig from_data_dir(const std::filesystem::path& data);
};

enum class Verdict { accepted, rejected };

struct RecommendationResponse {
    std::string communication_id;
    std::string responder;  // physician | patient
    Verdict verdict = Verdict::accepted;
    std::vector<std::string> chosen_options;
    std::optional<VirtualTime> at;  // defaults to the clock
};

/// Throws InvalidArgument on a malformed body.
RecommendationResponse response_from_json(const nlohmann::json& j);

/// What the dashboard renders for one Communication.
nlohmann::ordered_json recommendation_view(const platform::Resource& comm);

/// Every component wired onto one platform and event bus. Configuration
/// errors (unreadable rule, KB or master files) throw; broken guideline
/// files are skipped and listed in load_errors().
class Environment {
public:
    explicit Environment(EnvironmentConfig config, VirtualTime start = {});
    ~Environment();
    Environment(const Environment&) = delete;
    Environment& operator=(const Environment&) = delete;

    VirtualClock& clock() { return clock_; }
    platform::DataPlatform& platform() { return *platform_; }
    const platform::DataPlatform& platform() const { return *platform_; }
    platform::CaseManager& case_manager() { return *cm_; }
    const EnvironmentConfig& config() const { return config_; }
    const std::vector<std::pair<std::string, std::string>>& load_errors() const { return load_errors_; }

    /// No-op when the patient already exists.
    void add_patient(const std::string& id, const std::string& name = {});

    /// Throws NotFound for an unknown patient, InvalidArgument for an
    /// unknown event type.
    platform::EventEnvelope post_event(const std::string& type, const std::string& patient,
                                       std::map<std::string, std::string> payload = {});

    /// Communications for the patient, newest first (ties by id).
    std::vector<platform::Resource> list_recommendations(const std::string& patient,
                                                         std::optional<platform::ResourceStatus> status = {},
                                                         std::optional<std::string> audience = {}) const;

    /// Records the verdict, materializes accepted medications as active
    /// MedicationStatements and publishes recommendation-response.
    platform::Resource respond(const RecommendationResponse& resp);

    /// Waits until every queued delivery has been handled.
    void drain() { cm_->drain(); }

    /// Drops PDSS and VC and builds them again from the configuration.
    void restart_components();

    void on_pdss_run(std::function<void(const pdss::AssessmentRun&)> f);
    void on_vc_session(std::function<void(const vc::CoachingSession&)> f);

private:
    void start_components();

    EnvironmentConfig config_;
    VirtualClock clock_;
    std::unique_ptr<platform::DataPlatform> platform_;
    kdom::Kdom kdom_;
    gocom::InteractionKb kb_;
    std::unique_ptr<gocom::Gocom> gocom_;
    bridge::JsonExternalStore external_;
    std::unique_ptr<pdss::Pdss> pdss_;
    std::unique_ptr<vc::Vc> vc_;
    std::function<void(const pdss::AssessmentRun&)> pdss_observer_;
    std::function<void(const vc::CoachingSession&)> vc_observer_;
    std::vector<std::pair<std::string, std::string>> load_errors_;
    std::mutex respond_mutex_;
    std::unique_ptr<platform::CaseManager> cm_;  // last: stops delivering first
};

}  // namespace cig::gateway
