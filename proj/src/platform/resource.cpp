#include "cig/platform/resource.hpp"

#include <array>

#include "cig/core/error.hpp"

namespace cig::platform {

namespace {

constexpr std::array<std::pair<ResourceType, std::string_view>, 5> type_names{{
    {ResourceType::Patient, "Patient"},
    {ResourceType::Observation, "Observation"},
    {ResourceType::Communication, "Communication"},
    {ResourceType::MedicationStatement, "MedicationStatement"},
    {ResourceType::MedicationRequest, "MedicationRequest"},
}};

constexpr std::array<std::pair<ResourceStatus, std::string_view>, 6> status_names{{
    {ResourceStatus::active, "active"},
    {ResourceStatus::pending, "pending"},
    {ResourceStatus::accepted, "accepted"},
    {ResourceStatus::rejected, "rejected"},
    {ResourceStatus::expired, "expired"},
    {ResourceStatus::completed, "completed"},
}};

}  // namespace

std::string_view to_string(ResourceType type)
{
    for (const auto& [t, name] : type_names)
        if (t == type) return name;
    return "?";
}

std::optional<ResourceType> parse_resource_type(std::string_view text)
{
    for (const auto& [t, name] : type_names)
        if (name == text) return t;
    return std::nullopt;
}

std::string_view to_string(ResourceStatus status)
{
    for (const auto& [s, name] : status_names)
        if (s == status) return name;
    return "?";
}

std::optional<ResourceStatus> parse_resource_status(std::string_view text)
{
    for (const auto& [s, name] : status_names)
        if (name == text) return s;
    return std::nullopt;
}

bool is_legal_status_change(ResourceStatus from, ResourceStatus to)
{
    using S = ResourceStatus;
    switch (from) {
    case S::pending: return to == S::accepted || to == S::rejected || to == S::expired;
    case S::accepted: return to == S::completed;
    case S::active: return to == S::completed || to == S::expired;
    default: return false;
    }
}

bool ResourceQuery::matches(const Resource& r) const
{
    if (r.type != type) return false;
    if (r.patient_id != patient_id) return false;
    if (code && r.code != *code) return false;
    if (source_type && r.source_type != *source_type) return false;
    if (status && r.status != *status) return false;
    if (window) {
        auto at = r.effective_at.value_or(VirtualTime{});
        if (!(window->first < at && at <= window->second)) return false;
    }
    return true;
}

nlohmann::ordered_json to_json(const Resource& r)
{
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["resourceType"] = std::string(to_string(r.type));
    j["patient"] = r.patient_id;
    j["code"] = r.code;
    j["value"] = to_json(r.value);
    j["sourceType"] = r.source_type;
    j["status"] = std::string(to_string(r.status));
    if (r.effective_at) j["effectiveAt"] = r.effective_at->seconds;
    j["properties"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.properties) j["properties"][k] = v;
    return j;
}

Resource resource_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw InvalidArgument("resource must be a JSON object");
    Resource r;
    r.id = j.value("id", "");
    auto type_text = j.value("resourceType", "");
    auto type = parse_resource_type(type_text);
    if (!type) throw InvalidArgument("unknown resourceType '" + type_text + "'");
    r.type = *type;
    r.patient_id = j.value("patient", "");
    r.code = j.value("code", "");
    if (auto it = j.find("value"); it != j.end()) r.value = value_from_json(*it);
    r.source_type = j.value("sourceType", "");
    auto status_text = j.value("status", "active");
    auto status = parse_resource_status(status_text);
    if (!status) throw InvalidArgument("unknown status '" + status_text + "'");
    r.status = *status;
    if (auto it = j.find("effectiveAt"); it != j.end() && !it->is_null())
        r.effective_at = VirtualTime{it->get<std::int64_t>()};
    if (auto it = j.find("properties"); it != j.end()) {
        if (!it->is_object()) throw InvalidArgument("properties must be a flat string map");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) throw InvalidArgument("property '" + k + "' must be a string");
            r.properties[k] = v.get<std::string>();
        }
    }
    return r;
}

}  // namespace cig::platform
