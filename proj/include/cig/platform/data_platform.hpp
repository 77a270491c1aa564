#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cig/core/clock.hpp"
#include "cig/engine/types.hpp"
#include "cig/platform/event.hpp"
#include "cig/platform/journal.hpp"
#include "cig/platform/resource.hpp"

namespace cig::platform {

struct PlatformOptions {
    /// Without a journal the platform is purely in-memory.
    std::optional<std::filesystem::path> journal;
    bool fsync = true;
};

/// DP: resource repository, execution traces and the CM event archive.
/// Thread-safe; every mutation is journaled before it becomes visible.
class DataPlatform {
public:
    /// Rebuilds state from the journal when one is configured.
    explicit DataPlatform(const Clock& clock, PlatformOptions options = {});

    const Clock& clock() const { return clock_; }

    /// Returns the stored id. Throws Conflict on a duplicate id and
    /// InvalidArgument on a missing id or a patient-scoped resource
    /// without patient.
    std::string store(Resource res);

    std::optional<Resource> get(const std::string& id) const;
    std::vector<Resource> query(const ResourceQuery& q) const;
    bool has_patient(const std::string& patient_id) const;
    /// Patients with a Patient resource, sorted.
    std::vector<std::string> patients() const;

    /// Throws NotFound, or InvalidState on an illegal lifecycle change.
    /// `properties` are merged into the resource.
    Resource update_status(const std::string& id, ResourceStatus status, const PropertyMap& properties = {});
    std::vector<StatusChange> status_history(const std::string& id) const;

    /// Throws InvalidState when a record's seq does not follow the stored
    /// history of the instance.
    std::size_t append_trace(const std::string& instance_id, const std::string& patient_id,
                             std::span<const engine::TransitionRecord> records);
    std::vector<engine::TransitionRecord> get_trace(const std::string& instance_id) const;
    bool has_trace(const std::string& instance_id) const;
    /// Instance ids with trace records for the patient, in first-append order.
    std::vector<std::string> trace_instances(const std::string& patient_id) const;

    void archive_event(const EventEnvelope& ev);
    std::vector<EventEnvelope> events(const std::string& patient_id) const;
    std::uint64_t last_event_seq(const std::string& patient_id) const;

private:
    void apply(const nlohmann::json& record);
    void apply_resource(Resource res);
    void apply_status(const std::string& id, ResourceStatus status, VirtualTime at, const PropertyMap& props);
    void apply_trace(const std::string& instance_id, const std::string& patient_id, engine::TransitionRecord rec);
    void apply_event(EventEnvelope ev);
    void check_trace(const std::string& instance_id, std::span<const engine::TransitionRecord> records) const;

    struct Stored {
        Resource resource;
        std::vector<StatusChange> history;
    };

    const Clock& clock_;
    mutable std::shared_mutex mutex_;
    std::unique_ptr<Journal> journal_;

    std::vector<Stored> resources_;
    std::unordered_map<std::string, std::size_t> by_id_;
    // (patient, type) -> indices in insertion order
    std::map<std::pair<std::string, ResourceType>, std::vector<std::size_t>> by_patient_type_;

    std::unordered_map<std::string, std::vector<engine::TransitionRecord>> traces_;
    std::unordered_map<std::string, std::vector<std::string>> trace_index_;

    std::unordered_map<std::string, std::vector<EventEnvelope>> events_;
};

}  // namespace cig::platform
