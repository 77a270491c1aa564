#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cig/core/time.hpp"
#include "cig/core/value.hpp"

namespace cig::platform {

enum class ResourceType { Patient, Observation, Communication, MedicationStatement, MedicationRequest };
enum class ResourceStatus { active, pending, accepted, rejected, expired, completed };

std::string_view to_string(ResourceType type);
std::optional<ResourceType> parse_resource_type(std::string_view text);
std::string_view to_string(ResourceStatus status);
std::optional<ResourceStatus> parse_resource_status(std::string_view text);

/// pending -> accepted|rejected|expired, accepted -> completed,
/// active -> completed|expired. Everything else is illegal.
bool is_legal_status_change(ResourceStatus from, ResourceStatus to);

using PropertyMap = std::map<std::string, std::string>;

/// FHIR-lite record: a flat projection of the five FHIR resource types the
/// environment exchanges.
struct Resource {
    std::string id;
    ResourceType type = ResourceType::Observation;
    std::string patient_id;
    std::string code;
    Value value;
    std::string source_type;  // creator: patient, physician, pdss, vc, system, ...
    ResourceStatus status = ResourceStatus::active;
    std::optional<VirtualTime> effective_at;  // store() fills it from the clock
    PropertyMap properties;

    bool operator==(const Resource&) const = default;
};

struct StatusChange {
    ResourceStatus status = ResourceStatus::active;
    VirtualTime at;

    bool operator==(const StatusChange&) const = default;
};

struct ResourceQuery {
    enum class Order { oldest_first, newest_first };

    ResourceType type = ResourceType::Observation;
    std::string patient_id;
    std::optional<std::string> code;
    std::optional<std::string> source_type;
    std::optional<ResourceStatus> status;
    /// Half-open (from, to].
    std::optional<std::pair<VirtualTime, VirtualTime>> window;
    Order order = Order::oldest_first;
    std::optional<std::size_t> limit;

    bool matches(const Resource& r) const;
};

/// JSON shape used by the journal, scenario files and the HTTP API:
/// {id, resourceType, patient, code, value, sourceType, status, effectiveAt, properties}
nlohmann::ordered_json to_json(const Resource& r);
Resource resource_from_json(const nlohmann::json& j);

}  // namespace cig::platform
