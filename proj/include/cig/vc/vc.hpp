#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cig/bridge/cig_set.hpp"
#include "cig/bridge/resolver.hpp"
#include "cig/engine/instance.hpp"
#include "cig/platform/case_manager.hpp"

namespace cig::vc {

enum class SessionStatus { running, quiescent, done, aborted };

std::string_view to_string(SessionStatus s);

struct CoachingSession {
    std::string session_id;
    std::string patient_id;
    platform::EventEnvelope trigger_event;
    std::vector<std::string> instances;  // master first
    std::vector<std::string> outputs;    // Communication ids
    std::vector<std::string> effects;    // one line per dispatch, in order
    std::size_t iterations = 0;
    SessionStatus status = SessionStatus::running;
    std::string note;  // why a session was aborted
    std::vector<engine::RecordedInstance> recorded;  // engine inputs per instance
};

nlohmann::ordered_json to_json(const CoachingSession& s);

/// What an internal handler may touch. `write` stores a patient-facing
/// Communication and returns its id.
struct HandlerContext {
    const CoachingSession& session;
    const std::string& instance_id;
    const std::string& task;
    const model::MetaPropertyMap& meta;
    const std::string& text;  // task procedure with {item} placeholders filled
    VirtualTime now;
    const bridge::ExternalSource* external;
    std::function<std::string(platform::Resource)> write;
};

/// Must be deterministic given its context. Returns the Communication ids
/// it wrote; an exception discards the task.
using InternalHandler = std::function<std::vector<std::string>(const HandlerContext&)>;

class HandlerCatalog {
public:
    /// schedule_tips and snooze_reminder.
    static HandlerCatalog defaults();

    /// Throws Conflict on a duplicate id.
    void add(const std::string& id, InternalHandler handler);
    const InternalHandler* find(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, InternalHandler> handlers_;
};

struct VcOptions {
    std::size_t iteration_cap = 1000;
};

inline constexpr std::string_view subscriber_id = "vc";

/// Replaces every {item} in `text` with the instance's value of that item
/// (left as is when the item is unknown or undeclared).
std::string fill_placeholders(const std::string& text, const engine::EngineInstance& inst);

/// VC: master-CIG dispatch and the interactive loop over active tasks.
/// Keeps nothing between sessions.
class Vc {
public:
    Vc(platform::DataPlatform& platform, const kdom::Kdom* kdom, const bridge::ExternalSource* external,
       std::optional<model::ValidatedGuideline> master, bridge::CigSet specialized,
       HandlerCatalog handlers = HandlerCatalog::defaults(), VcOptions options = {});

    CoachingSession handle_event(const platform::EventEnvelope& ev) const;

    /// Subscribes to symptom-reported, time-tick and capsule-completed.
    void attach(platform::CaseManager& cm);

    void on_session(std::function<void(const CoachingSession&)> observer) { observer_ = std::move(observer); }

private:
    struct Slot {
        std::string instance_id;
        engine::EngineInstance instance;
    };
    struct Session;

    bool dispatch_action(Session& s, Slot& slot, const engine::ActiveTask& task) const;
    bool resolve_enquiry(Session& s, Slot& slot, const engine::ActiveTask& task) const;
    void run_session(Session& s) const;
    Slot enact(Session& s, const model::ValidatedGuideline& g) const;
    std::string write(Session& s, platform::Resource r) const;

    platform::DataPlatform& platform_;
    const kdom::Kdom* kdom_;
    const bridge::ExternalSource* external_;
    std::optional<model::ValidatedGuideline> master_;
    bridge::CigSet specialized_;
    HandlerCatalog handlers_;
    VcOptions options_;
    bridge::DataResolver resolver_;
    std::function<void(const CoachingSession&)> observer_;
};

}  // namespace cig::vc
